#pragma once

// Renders a record into model input for each prompt setting: a single
// instruction string for general-purpose models, or a [CLS]/[SEP] segmented
// sequence for fine-tuned sequence-to-sequence models.

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "qgbench/corpus.hpp"
#include "qgbench/error.hpp"

namespace qgbench::promptkit {

enum class PromptSetting { WithLongPrompt, WithShortPrompt, WithoutPrompt };

inline constexpr PromptSetting kAllSettings[] = {
    PromptSetting::WithLongPrompt, PromptSetting::WithShortPrompt, PromptSetting::WithoutPrompt};

inline std::string_view to_string(PromptSetting s) {
  switch (s) {
    case PromptSetting::WithLongPrompt: return "WithLongPrompt";
    case PromptSetting::WithShortPrompt: return "WithShortPrompt";
    case PromptSetting::WithoutPrompt: return "WithoutPrompt";
  }
  return "?";
}

/// Human-facing label used in report headings.
inline std::string_view display_name(PromptSetting s) {
  switch (s) {
    case PromptSetting::WithLongPrompt: return "With Long Prompt";
    case PromptSetting::WithShortPrompt: return "With Short Prompt";
    case PromptSetting::WithoutPrompt: return "Without Prompt";
  }
  return "?";
}

/// Accepts the canonical names plus the CLI short forms long/short/none.
inline std::optional<PromptSetting> parse_setting(std::string_view s) {
  if (s == "WithLongPrompt" || s == "long") return PromptSetting::WithLongPrompt;
  if (s == "WithShortPrompt" || s == "short") return PromptSetting::WithShortPrompt;
  if (s == "WithoutPrompt" || s == "none" || s == "without") return PromptSetting::WithoutPrompt;
  return std::nullopt;
}

inline PromptSetting setting_from_string(std::string_view s) {
  if (auto v = parse_setting(s)) return *v;
  throw InvalidArgument("unknown prompt setting '" + std::string(s) + "'");
}

enum class Marker { CLS, SEP };

struct Segment {
  Marker marker;
  std::string payload;  // empty for the closing SEP

  friend bool operator==(const Segment&, const Segment&) = default;
};

struct Instruction {
  std::string text;
  friend bool operator==(const Instruction&, const Instruction&) = default;
};

struct Segmented {
  std::vector<Segment> segments;
  friend bool operator==(const Segmented&, const Segmented&) = default;
};

using RenderedInput = std::variant<Instruction, Segmented>;

enum class Side { Source, Target };

inline Instruction render_instruction(const corpus::QuadRecord& r, PromptSetting setting) {
  switch (setting) {
    case PromptSetting::WithLongPrompt:
      return {"Given the context " + r.context + " and the long prompt " + r.long_prompt +
              ", generate a Question"};
    case PromptSetting::WithShortPrompt:
      return {"Given the context " + r.context + " and the short prompt " + r.short_prompt +
              ", generate a Question"};
    case PromptSetting::WithoutPrompt:
      return {"Given the context " + r.context + ", generate a Question"};
  }
  return {};
}

/// Each marker carries the text that follows it: [CLS] C [SEP] P [SEP] is
/// {CLS:C}, {SEP:P}, {SEP:""}.
inline Segmented render_segmented(const corpus::QuadRecord& r, PromptSetting setting, Side side) {
  if (side == Side::Target) {
    return {{{Marker::CLS, r.question}, {Marker::SEP, {}}}};
  }
  switch (setting) {
    case PromptSetting::WithLongPrompt:
      return {{{Marker::CLS, r.context}, {Marker::SEP, r.long_prompt}, {Marker::SEP, {}}}};
    case PromptSetting::WithShortPrompt:
      return {{{Marker::CLS, r.context}, {Marker::SEP, r.short_prompt}, {Marker::SEP, {}}}};
    case PromptSetting::WithoutPrompt:
      return {{{Marker::CLS, r.context}, {Marker::SEP, {}}}};
  }
  return {};
}

inline std::size_t count_markers(const Segmented& s, Marker m) {
  std::size_t n = 0;
  for (const auto& seg : s.segments) n += seg.marker == m ? 1 : 0;
  return n;
}

/// "[CLS] payload [SEP] payload [SEP]" with single spaces, no trailing space.
inline std::string flatten(const Segmented& s) {
  std::string out;
  for (const auto& seg : s.segments) {
    if (!out.empty()) out += ' ';
    out += seg.marker == Marker::CLS ? "[CLS]" : "[SEP]";
    if (!seg.payload.empty()) {
      out += ' ';
      out += seg.payload;
    }
  }
  return out;
}

/// The literal string sent to a generation endpoint.
inline std::string flatten(const RenderedInput& input) {
  if (const auto* ins = std::get_if<Instruction>(&input)) return ins->text;
  return flatten(std::get<Segmented>(input));
}

/// Text of the context as embedded in a rendered input, used by the mock
/// adapter. Instruction inputs are recognised by their fixed prefix.
inline std::string context_of(const RenderedInput& input) {
  if (const auto* seg = std::get_if<Segmented>(&input)) {
    return seg->segments.empty() ? std::string{} : seg->segments.front().payload;
  }
  std::string_view t = std::get<Instruction>(input).text;
  constexpr std::string_view prefix = "Given the context ";
  if (t.substr(0, prefix.size()) == prefix) t.remove_prefix(prefix.size());
  for (std::string_view tail : {" and the long prompt ", " and the short prompt ",
                                ", generate a Question"}) {
    if (auto pos = t.rfind(tail); pos != std::string_view::npos) {
      t = t.substr(0, pos);
      break;
    }
  }
  return std::string(t);
}

}  // namespace qgbench::promptkit
