#include "mikt/harness/cli.hpp"

int main(int argc, char** argv) { return mikt::harness::cli_main(argc, argv); }
