#include <math.h>
#include <stdio.h>
#include <string.h>

#include "nevrand.h"

int main(void) {
    NrSequence *seq = NULL;
    double log_sigma = 0.0;
    if (nr_sequence_parse("exponential", &seq) != NR_STATUS_OK) return 1;
    if (nr_log_sigma(seq, 1.0, &log_sigma) != NR_STATUS_OK) return 2;
    if (fabs(exp(log_sigma) - 1.509829560690897) > 1e-12) return 3;

    NrSample *sample = NULL;
    size_t zeros = 0;
    double residual = 1.0;
    if (nr_sample_new(seq, NR_MODEL_STEINHAUS, 30, 11, 0, &sample) != NR_STATUS_OK) return 4;
    if (nr_count_zeros(sample, 5.0, 0.0, 0.0, &zeros) != NR_STATUS_OK) return 5;
    if (nr_jensen_residual(sample, 5.0, &residual) != NR_STATUS_OK || residual > 1e-7) return 6;

    NrSequence *bad = NULL;
    char msg[256];
    if (nr_sequence_parse("nope", &bad) != NR_STATUS_INVALID_INPUT) return 7;
    if (nr_last_error_message(msg, sizeof msg) == 0 || strstr(msg, "nope") == NULL) return 8;

    printf("%s zeros=%zu\n", nr_version(), zeros);
    nr_sample_free(sample);
    nr_sequence_free(seq);
    return 0;
}
