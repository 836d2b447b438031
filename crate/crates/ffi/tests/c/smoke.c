#include <stdio.h>
#include <string.h>

#include "kodual.h"

#define CHECK(cond)                                                   \
  do {                                                                \
    if (!(cond)) {                                                    \
      fprintf(stderr, "%s:%d: %s\n", __FILE__, __LINE__, #cond);      \
      return 1;                                                       \
    }                                                                 \
  } while (0)

int main(void) {
  KdGraded *ko = NULL;
  CHECK(kd_ko_homotopy(-4, 12, &ko) == KD_STATUS_OK);

  KdGroup *g = NULL;
  char *s = NULL;
  CHECK(kd_graded_get(ko, 1, &g) == KD_STATUS_OK);
  CHECK(kd_group_to_string(g, &s) == KD_STATUS_OK);
  CHECK(strcmp(s, "Z/2") == 0);
  kd_string_free(s);
  kd_group_free(g);

  KdGraded *dual = NULL;
  int64_t shift = -1;
  CHECK(kd_anderson_dual(ko, &dual) == KD_STATUS_OK);
  CHECK(kd_detect_shift(dual, KD_REFERENCE_KO, 8, &shift) == KD_STATUS_OK);
  CHECK(shift == 4);
  kd_graded_free(dual);
  kd_graded_free(ko);

  CHECK(kd_picard_kernel(7, 4, 3, &g) == KD_STATUS_NOT_A_GENERATOR);
  CHECK(kd_last_error() != NULL);

  printf("ok\n");
  return 0;
}
