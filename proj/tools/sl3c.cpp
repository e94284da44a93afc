#include "sl3/cli.hpp"

int main(int argc, char** argv) { return sl3::cli::main(argc, argv); }
