// SPDX-License-Identifier: Apache-2.0
#include "raysep/cli.hpp"

int main(int argc, char** argv) { return raysep::cli_main(argc, argv); }
