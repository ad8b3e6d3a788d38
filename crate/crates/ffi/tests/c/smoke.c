#include <math.h>
#include <stdio.h>

#include "jamgame.h"

static const char *SCALAR =
    "[plant]\nA = [[2.0]]\nB = [1.0]\n"
    "[payoff]\nkind = \"lq\"\ntau = 1.6\n"
    "[channels]\nq = [0.1, 0.9]\nj_minus = 2\n"
    "[state]\nx = [1.0]\n";

int main(void) {
    JgScenario *s = NULL;
    if (jg_scenario_from_toml(SCALAR, &s) != JG_STATUS_OK) {
        char *msg = jg_last_error();
        fprintf(stderr, "parse failed: %s\n", msg ? msg : "?");
        jg_string_free(msg);
        return 1;
    }
    JgSolveResult r;
    double p[2];
    if (jg_solve(s, &r, p, 2) != JG_STATUS_OK) return 2;
    if (r.kind != JG_SADDLE_KIND_NONTRIVIAL_MIXED) return 3;
    if (fabs(r.u_star - (sqrt(2.0) - 2.0)) > 1e-6 || fabs(r.value - 5.143146) > 1e-6) return 4;
    if (fabs(p[0] - 0.60723) > 1e-5) return 5;

    JgScenario *bad = NULL;
    static const double q_desc[2] = {0.9, 0.1};
    static const double one[1] = {1.0}, two[1] = {2.0};
    if (jg_scenario_new_lq(two, one, one, 1, q_desc, 2, 2, 1.6, &bad) != JG_STATUS_INVALID_SCENARIO) return 6;
    char *msg = jg_last_error();
    if (!msg) return 7;
    jg_string_free(msg);

    printf("jamgame %s: u* = %.9f, J = %.9f\n", jg_version(), r.u_star, r.value);
    jg_scenario_free(s);
    return 0;
}
