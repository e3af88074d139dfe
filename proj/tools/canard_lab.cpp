#include "canard_lab/cli.hpp"

int main(int argc, char** argv)
{
    return canard::cli::run(argc, argv);
}
