// Acceptance suite: one pass/fail line per criterion, details for failing
// checks, [info] lines for the convergence diagnostics.  Exit code equals
// the number of failed criteria.  Run a single criterion with
// `acceptance --criterion N`.

#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include <bosefeed/validation.hpp>

using namespace bosefeed;

int main(int argc, char** argv) {
    int only = 0;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc)
            only = std::atoi(argv[i + 1]);
    }

    const ValidationOptions opt;
    std::vector<CriterionReport> reports;
    using Fn = CriterionReport (*)(const ValidationOptions&);
    const Fn criteria[] = {criterion1, criterion2, criterion3, criterion4,
                           criterion5, criterion6, criterion7, criterion8,
                           criterion9, criterion10};
    for (int i = 0; i < 10; ++i) {
        if (only != 0 && only != i + 1) continue;
        reports.push_back(criteria[i](opt));
    }

    int failed = 0;
    for (const auto& rep : reports) {
        const bool ok = rep.passed();
        std::printf("criterion %2d [%s] %s (%.2fs)\n", rep.id, ok ? "PASS" : "FAIL",
                    rep.title.c_str(), rep.seconds);
        for (const auto& c : rep.checks) {
            if (c.diagnostic) {
                std::printf("    [info] %-55s observed %.3e  tolerance %.3e\n",
                            c.check.c_str(), c.observed, c.tolerance);
            } else if (!c.passed) {
                std::printf("    [fail] %-55s observed %.3e  tolerance %.3e\n",
                            c.check.c_str(), c.observed, c.tolerance);
            }
        }
        if (!ok) ++failed;
    }
    return failed;
}
