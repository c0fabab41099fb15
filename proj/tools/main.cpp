#include "cli.hpp"

int main(int argc, char** argv) { return invsig::cli::run(argc, argv); }
