#include "erlab/cli.hpp"

int main(int argc, char** argv) { return erlab::cli_main(argc, argv); }
