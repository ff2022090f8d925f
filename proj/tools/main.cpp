#include "triad/cli.hpp"

int main(int argc, char** argv) { return triad::cli::run(argc, argv); }
