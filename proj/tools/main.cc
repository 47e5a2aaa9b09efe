#include "covertlqr/cli.h"

int main(int argc, char** argv) { return covertlqr::cli::Run(argc, argv); }
