#include "trendlab/cli.hpp"

int main(int argc, char** argv) { return trendlab::cli::run(argc, argv); }
