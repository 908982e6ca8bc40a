#include "qgbench/harness/cli.hpp"

int main(int argc, char** argv) { return qgbench::harness::cli_dispatch(argc, argv); }
