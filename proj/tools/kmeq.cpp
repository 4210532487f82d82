#include "kmeq/harness.hpp"

int main(int argc, char** argv) { return kmeq::cli_main(argc, argv); }
