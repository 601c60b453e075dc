#include "smmal/harness.hpp"

int main(int argc, char** argv) { return smmal::cli_main(argc, argv); }
