#include "popctl/validation.hpp"

#include <cstdio>

int main() {
    int failed = 0;
    for (int id : popctl::criterion_ids()) {
        const popctl::CriterionResult r = popctl::run_criterion(id);
        std::printf("%s\n", popctl::format_result(r).c_str());
        std::fflush(stdout);
        failed += r.pass ? 0 : 1;
    }
    std::printf("%d of %zu criteria failed\n", failed, popctl::criterion_ids().size());
    return failed == 0 ? 0 : 1;
}
