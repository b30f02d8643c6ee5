#include "h2nmf/h2nmf.h"

int main(void) {
  h2nmf_options opts;
  h2nmf_options_init(&opts);
  return h2nmf_status_name(H2NMF_OK)[0] == 'o' && opts.delta_hat > 0 ? 0 : 1;
}
