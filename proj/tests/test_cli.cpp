#include <sys/wait.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <string>

#include <gtest/gtest.h>

namespace {

struct Run {
    int code;
    std::string out;
};

Run cli(const std::string& args) {
    const std::string cmd = std::string("\"") + AMPLASSO_CLI_PATH + "\" " + args + " 2>/dev/null";
    Run r{-1, {}};
    FILE* p = popen(cmd.c_str(), "r");
    if (!p) return r;
    char buf[4096];
    while (std::size_t got = std::fread(buf, 1, sizeof buf, p)) r.out.append(buf, got);
    const int status = pclose(p);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

} // namespace

TEST(Cli, SeSolvePrintsHeaderAndOneRow) {
    const auto r = cli("se-solve --gamma 0.4");
    ASSERT_EQ(r.code, 0);
    EXPECT_EQ(r.out.rfind("lambda,beta,tau,gamma,sigma_hat,mse,detection\n", 0), 0u);
    EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 2);
}

TEST(Cli, ConfigurationErrorsExitWithTwo) {
    EXPECT_EQ(cli("se-solve --prior 0.5:0,0.4:1 --beta 1").code, 2);
    EXPECT_EQ(cli("se-solve --delta 1.5 --beta 1").code, 2);
    EXPECT_EQ(cli("se-solve --beta 1 --gamma 0.3").code, 2);
    EXPECT_EQ(cli("se-solve").code, 2);
    EXPECT_EQ(cli("no-such-command").code, 2);
    EXPECT_EQ(cli("amp-run --n 10 --big-n 20 --gamma 1.5").code, 2);
}

TEST(Cli, SolverErrorsExitWithThree) {
    // Zero threshold with a point-mass-free prior: risk/delta >= 1, no fixed point.
    EXPECT_EQ(cli("se-solve --beta 0").code, 3);
    EXPECT_EQ(cli("se-solve --lambda 1e6").code, 3);
}

TEST(Cli, HelpExitsCleanly) {
    EXPECT_EQ(cli("--help").code, 0);
}
