#include "mcsle/cli.hpp"

int main(int argc, char** argv) { return mcsle::cli_main(argc, argv); }
