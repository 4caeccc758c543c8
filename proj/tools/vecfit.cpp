#include "vecfit/harness.hpp"

int main(int argc, char** argv) { return vecfit::cli_main(argc, argv); }
