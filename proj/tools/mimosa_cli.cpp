#include "mimosa/cli.hpp"

int main(int argc, char** argv) { return mimosa::cli_main(argc, argv); }
