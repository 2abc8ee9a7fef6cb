#include "condenser/cli.hpp"

int main(int argc, char** argv) { return condenser::cli::run(argc, argv); }
