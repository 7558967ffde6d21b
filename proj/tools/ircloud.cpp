#include "ircloud/cli.hpp"

int main(int argc, char** argv) { return ircloud::cli::run(argc, argv); }
