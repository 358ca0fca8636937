#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <sys/wait.h>

#include <doctest.h>

// End-to-end checks of the installed command-line binary; WVA_CLI_PATH is
// injected by the build so the suite always tests the freshly built tool.

namespace {

namespace fs = std::filesystem;

struct CliResult {
    int exit_code = -1;
    std::string out;
};

CliResult run_cli(const std::string& args) {
    const std::string cmd =
        std::string(WVA_CLI_PATH) + " " + args + " 2>/dev/null";
    CliResult result;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    char buf[4096];
    std::size_t got;
    while ((got = fread(buf, 1, sizeof buf, pipe)) > 0)
        result.out.append(buf, got);
    const int status = pclose(pipe);
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return result;
}

std::string first_line(const std::string& text) {
    return text.substr(0, text.find('\n'));
}

int count_lines(const std::string& text) {
    int n = 0;
    for (char ch : text)
        if (ch == '\n') ++n;
    return n;
}

}  // namespace

TEST_CASE("cli: errors subcommand prints a CSV report") {
    const auto r = run_cli("errors");
    CHECK(r.exit_code == 0);
    CHECK(first_line(r.out) ==
          "aw,g,c,s,alpha,p_e2_ps,p_e2_nps,beta_ps,beta_nps,ratio_e2,"
          "ratio_beta");
    CHECK(count_lines(r.out) == 2);
    const auto swept = run_cli("errors --sweep g:0.5:2:4 --sweep aw:1:6:3");
    CHECK(swept.exit_code == 0);
    CHECK(count_lines(swept.out) == 13);
}

TEST_CASE("cli: density grid has the fixed resolution") {
    const auto r = run_cli("density --g 0.5 --sigma 0.8 --noise-s 0.3");
    CHECK(r.exit_code == 0);
    CHECK(first_line(r.out) == "x,f_initial,f_ps,f_nps");
    CHECK(count_lines(r.out) == 1202);
}

TEST_CASE("cli: contour and appendixc run end to end") {
    const auto contour = run_cli("contour --sweep aw:0.5:4:6 --sweep g:0.5:2:4");
    CHECK(contour.exit_code == 0);
    CHECK(first_line(contour.out) == "aw,g,ratio_e2,ratio_beta");
    CHECK(count_lines(contour.out) == 25);

    const auto appc = run_cli("appendixc --g 1.5 --alpha 0.05");
    CHECK(appc.exit_code == 0);
    CHECK(count_lines(appc.out) == 2);
    CHECK(appc.out.find("true") != std::string::npos);
}

TEST_CASE("cli: montecarlo validates its own closed forms") {
    const auto r = run_cli("montecarlo --samples 5000 --seed 3");
    CHECK(r.exit_code == 0);
    CHECK(first_line(r.out) == "quantity,analytic,empirical,half_width,pass");
    CHECK(count_lines(r.out) == 5);
    CHECK(r.out.find("false") == std::string::npos);
}

TEST_CASE("cli: --out writes the report to a file") {
    const fs::path target =
        fs::temp_directory_path() / "wva_cli_out_test.csv";
    fs::remove(target);
    const auto r = run_cli("errors --out " + target.string());
    CHECK(r.exit_code == 0);
    CHECK(r.out.empty());  // body went to the file, not stdout
    std::ifstream in(target);
    REQUIRE(in.good());
    std::string header;
    std::getline(in, header);
    CHECK(header ==
          "aw,g,c,s,alpha,p_e2_ps,p_e2_nps,beta_ps,beta_nps,ratio_e2,"
          "ratio_beta");
    in.close();
    fs::remove(target);
}

TEST_CASE("cli: relative --out resolves under WVA_OUT_DIR") {
    const fs::path dir = fs::temp_directory_path() / "wva_cli_outdir_test";
    fs::create_directories(dir);
    REQUIRE(setenv("WVA_OUT_DIR", dir.c_str(), 1) == 0);
    const auto r = run_cli("errors --out nested.csv");
    REQUIRE(unsetenv("WVA_OUT_DIR") == 0);
    CHECK(r.exit_code == 0);
    CHECK(fs::exists(dir / "nested.csv"));
    fs::remove_all(dir);
}

TEST_CASE("cli: usage problems exit with code 2") {
    CHECK(run_cli("bogus").exit_code == 2);
    CHECK(run_cli("errors --no-such-flag").exit_code == 2);
    CHECK(run_cli("errors --sweep q:0:1:5").exit_code == 2);
    CHECK(run_cli("errors --sweep g:0:1:1").exit_code == 2);
    CHECK(run_cli("errors --sweep g:0:1:3 --sweep c:1:2:3 --sweep s:0:1:3")
              .exit_code == 2);
    CHECK(run_cli("").exit_code == 2);  // a subcommand is required
    CHECK(run_cli("density --sigma -1").exit_code == 2);
}

TEST_CASE("cli: numeric degeneracies exit with code 3") {
    CHECK(run_cli("errors --g 45 --c 1").exit_code == 3);
}

TEST_CASE("cli: help is exit code 0") {
    CHECK(run_cli("--help").exit_code == 0);
    CHECK(run_cli("density --help").exit_code == 0);
}
