#include "sgmvar/cli.hpp"

int main(int argc, char** argv) { return sgmvar::cli::run(argc, argv); }
