#include "bhtlab/cli.hpp"

int main(int argc, char** argv) { return bhtlab::cli::main_entry(argc, argv); }
