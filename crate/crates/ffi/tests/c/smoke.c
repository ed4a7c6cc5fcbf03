#include <math.h>
#include <stdio.h>

#include "tsr_ffi.h"

#define CHECK(call)                                                       \
  do {                                                                    \
    TsrStatus s_ = (call);                                                \
    if (s_ != TSR_STATUS_OK) {                                            \
      fprintf(stderr, "%s failed (%d): %s\n", #call, (int)s_,             \
              tsr_last_error_message());                                  \
      return 1;                                                           \
    }                                                                     \
  } while (0)

int main(void) {
  double v = 0.0;
  CHECK(tsr_mmse(1.0, 1.0, &v));
  if (fabs(v - 0.5) > 1e-12) return 2;

  if (tsr_mmse(0.0, 0.4, &v) != TSR_STATUS_INVALID_ARGUMENT) return 3;
  if (tsr_last_error_message() == NULL) return 4;

  TsrOperator *op = NULL;
  TsrInstance *inst = NULL;
  TsrTrace *trace = NULL;
  CHECK(tsr_partial_dft_new(256, 179, 7, &op));
  CHECK(tsr_instance_generate(op, 0.4, 1e-3, 7, &inst));
  CHECK(tsr_run_tsr(inst, 0.4, 15, 0.0, &trace));
  size_t len = 0;
  CHECK(tsr_trace_len(trace, &len));
  double mse[15];
  if (len != 15) return 5;
  CHECK(tsr_trace_mse(trace, mse, len));
  if (!(mse[14] < mse[0])) return 6;

  tsr_trace_free(trace);
  tsr_instance_free(inst);
  tsr_operator_free(op);
  printf("ok %.3f dB\n", 10.0 * log10(mse[14]));
  return 0;
}
