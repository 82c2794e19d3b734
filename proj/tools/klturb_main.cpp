#include "klturb/cli/run.hpp"

int main(int argc, char** argv)
{
    return klturb::cli::run(argc, argv);
}
