#!/usr/bin/env python3
"""Independent scoring oracle for the 10-record end-to-end fixture.

Re-derives the mock adapter's outputs from the fixture, then scores each
(output, gold) pair with straightforward Python implementations that share
no code with the C++ library:

  * ROUGE-2 / ROUGE-L via collections.Counter and a textbook LCS table
  * METEOR by exhaustive enumeration of every one-to-one alignment
  * chrF and BLEU by direct enumeration of n-grams
  * Porter stems from NLTK's ORIGINAL_ALGORITHM mode

The results are frozen into tests/data/oracle_scores_fixture10.json and
compared against the C++ implementation at 1e-9.

Usage: score_oracle.py FIXTURE.ndjson OUT.json   (requires nltk)
"""
import json
import math
import sys
import unicodedata
from collections import Counter

from nltk.stem.porter import PorterStemmer

STEMMER = PorterStemmer(mode=PorterStemmer.ORIGINAL_ALGORITHM)


def is_punct(ch):
    c = ord(ch)
    if c < 0x80:
        return (0x21 <= c <= 0x2F) or (0x3A <= c <= 0x40) or (0x5B <= c <= 0x60) or (0x7B <= c <= 0x7E)
    return (c in (0xA1, 0xA7, 0xAB, 0xB6, 0xB7, 0xBB, 0xBF) or 0x2010 <= c <= 0x2027
            or 0x2030 <= c <= 0x205E or 0x3001 <= c <= 0x3003)


def tokenize(text):
    out = []
    for piece in text.split():
        a, b = 0, len(piece)
        while a < b and is_punct(piece[a]):
            a += 1
        while b > a and is_punct(piece[b - 1]):
            b -= 1
        tok = "".join(ch.lower() if "A" <= ch <= "Z" else ch for ch in piece[a:b])
        if tok:
            out.append(tok)
    return out


def prf(p, r):
    f = 0.0 if p + r == 0 else 2 * p * r / (p + r)
    return {"precision": p, "recall": r, "f1": f}


def ngrams(seq, n):
    return [tuple(seq[i:i + n]) for i in range(len(seq) - n + 1)]


def rouge_n(c, r, n):
    cc, rc = Counter(ngrams(c, n)), Counter(ngrams(r, n))
    overlap = sum(min(v, rc[k]) for k, v in cc.items())
    p = overlap / sum(cc.values()) if cc else 0.0
    rr = overlap / sum(rc.values()) if rc else 0.0
    return prf(p, rr)


def rouge_l(c, r):
    t = [[0] * (len(r) + 1) for _ in range(len(c) + 1)]
    for i in range(len(c)):
        for j in range(len(r)):
            t[i + 1][j + 1] = t[i][j] + 1 if c[i] == r[j] else max(t[i][j + 1], t[i + 1][j])
    l = t[len(c)][len(r)]
    return prf(l / len(c) if c else 0.0, l / len(r) if r else 0.0)


def meteor(c, r):
    cs = [STEMMER.stem(w) for w in c]
    rs = [STEMMER.stem(w) for w in r]
    best = None  # (exact, total, -chunks)

    def chunks_of(pairs):
        pairs = sorted(pairs)
        n = 0
        prev = None
        for ci, ri in pairs:
            if prev is None or not (ci == prev[0] + 1 and ri == prev[1] + 1):
                n += 1
            prev = (ci, ri)
        return n

    def rec(i, used, pairs, exact):
        nonlocal best
        if i == len(c):
            key = (exact, len(pairs), -chunks_of(pairs))
            if best is None or key > best:
                best = key
            return
        rec(i + 1, used, pairs, exact)
        for j in range(len(r)):
            if j in used:
                continue
            if c[i] == r[j]:
                rec(i + 1, used | {j}, pairs + [(i, j)], exact + 1)
            elif cs[i] == rs[j]:
                rec(i + 1, used | {j}, pairs + [(i, j)], exact)

    rec(0, frozenset(), [], 0)
    m = best[1]
    if m == 0:
        return 0.0
    chunks = -best[2]
    p, rr = m / len(c), m / len(r)
    fmean = p * rr / (0.9 * p + 0.1 * rr)
    penalty = 0.5 * (chunks / m) ** 3
    return fmean * (1 - penalty)


def chrf(cand, ref, max_n=6, beta=2.0):
    c = [ch for ch in cand if not ch.isspace()]
    r = [ch for ch in ref if not ch.isspace()]
    ps, rs = [], []
    for n in range(1, max_n + 1):
        rg = ngrams(r, n)
        if not rg:
            continue
        cg = ngrams(c, n)
        cc, rc = Counter(cg), Counter(rg)
        match = sum(min(v, rc[k]) for k, v in cc.items())
        ps.append(match / len(cg) if cg else 0.0)
        rs.append(match / len(rg))
    if not ps:
        return 0.0
    p, rr = sum(ps) / len(ps), sum(rs) / len(rs)
    if p == 0 and rr == 0:
        return 0.0
    b2 = beta * beta
    return (1 + b2) * p * rr / (b2 * p + rr)


def bleu(c, r, max_n=4, eps=1e-9):
    if not c:
        return 0.0
    logs = []
    for n in range(1, max_n + 1):
        cg = ngrams(c, n)
        if not cg:
            break
        rc = Counter(ngrams(r, n))
        match = sum(min(v, rc[k]) for k, v in Counter(cg).items())
        logs.append(math.log((match if match > 0 else eps) / len(cg)))
    bp = 1.0 if len(c) >= len(r) else math.exp(1 - len(r) / len(c))
    return bp * math.exp(sum(logs) / len(logs))


def mock_output(context):
    return "What is " + " ".join(context.split()[:5]) + "?"


def main():
    fixture, out = sys.argv[1], sys.argv[2]
    rows = []
    with open(fixture, encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            rec = json.loads(line)
            cand_text = mock_output(rec["context"])
            gold_text = rec["question"]
            c, g = tokenize(cand_text), tokenize(gold_text)
            rows.append({
                "record_id": rec["id"],
                "candidate": cand_text,
                "rouge2": rouge_n(c, g, 2),
                "rougeL": rouge_l(c, g),
                "meteor": meteor(c, g),
                "chrf": chrf(cand_text, gold_text),
                "bleu": bleu(c, g),
            })
    with open(out, "w", encoding="utf-8") as f:
        json.dump({"pairs": rows}, f, indent=1, ensure_ascii=False)
        f.write("\n")


if __name__ == "__main__":
    main()
