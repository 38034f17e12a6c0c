#include "sunlit/cli.hpp"

int main(int argc, char** argv) { return sunlit::cli::run(argc, argv); }
