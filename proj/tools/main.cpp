#include "ammlab/cli.hpp"

int main(int argc, char** argv) { return amm::cli::run(argc, argv); }
