#include <stdio.h>
#include "detour_choice.h"

int main(int argc, char **argv) {
    if (argc < 2) return 2;
    DcDataset *d = NULL;
    if (dc_dataset_load(argv[1], &d) != DC_STATUS_OK) {
        char msg[256];
        dc_last_error_message(msg, sizeof msg);
        fprintf(stderr, "load: %s\n", msg);
        return 1;
    }
    DcResult *r = NULL;
    if (dc_fit(d, "cost-time", false, 0, 1, &r) != DC_STATUS_OK) {
        dc_dataset_free(d);
        return 1;
    }
    DcFitSummary s;
    dc_result_summary(r, &s);
    printf("parameters %zu\nll_null %.3f\nll_final %.3f\n", s.n_parameters, s.ll_null, s.ll_final);
    for (size_t i = 0; i < dc_result_parameter_count(r); i++) {
        char name[64];
        double v;
        dc_result_parameter_name(r, i, name, sizeof name, NULL);
        dc_result_parameter(r, i, &v, NULL, NULL);
        printf("%s %.3f\n", name, v);
    }
    dc_result_free(r);
    dc_dataset_free(d);
    return 0;
}
