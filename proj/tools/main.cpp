#include "robising/harness.hpp"

int main(int argc, char** argv) { return robising::cli_main(argc, argv); }
