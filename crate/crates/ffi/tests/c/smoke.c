#include <stdio.h>
#include <string.h>

#include "relex.h"

#define CHECK(cond)                                                        \
  do {                                                                     \
    if (!(cond)) {                                                         \
      const char *err = relex_last_error();                                \
      fprintf(stderr, "line %d: %s (%s)\n", __LINE__, #cond,               \
              err ? err : "no error");                                     \
      return 1;                                                            \
    }                                                                      \
  } while (0)

int main(int argc, char **argv) {
  CHECK(argc == 2);

  RelexMatcher *matcher = NULL;
  CHECK(relex_matcher_new(argv[1], RELEX_ENTITY_CLASS_FOOD, false, &matcher) == RELEX_STATUS_OK);
  char *json = NULL;
  CHECK(relex_matcher_find(matcher, "Extra olive oil and mango.", &json) == RELEX_STATUS_OK);
  printf("%s\n", json);
  relex_string_free(json);
  relex_matcher_free(matcher);

  CHECK(relex_matcher_new("/nonexistent.csv", RELEX_ENTITY_CLASS_FOOD, false, &matcher) == RELEX_STATUS_IO);
  CHECK(strstr(relex_last_error(), "/nonexistent.csv") != NULL);

  unsigned char labels[3] = {1, 1, 1};
  RelexVote vote;
  CHECK(relex_vote(labels, 3, 3, &vote) == RELEX_STATUS_OK && vote == RELEX_VOTE_POSITIVE);
  CHECK(relex_vote(labels, 2, 3, &vote) == RELEX_STATUS_INVALID_ARGUMENT);

  double losses[3] = {0.90, 0.897, 0.8955};
  bool stop = false;
  CHECK(relex_should_stop(losses, 3, 5e-3, 2, &stop) == RELEX_STATUS_OK && stop);

  RelexMetrics m;
  CHECK(relex_metrics_from_confusion(2, 1, 1, 6, &m) == RELEX_STATUS_OK);
  printf("%.6f\n", m.macro_f1);

  char *masked = NULL;
  CHECK(relex_mask("Mango pulp is rich in beta-carotene.", 0, 5, 22, 35, &masked) == RELEX_STATUS_OK);
  printf("%s\n", masked);
  relex_string_free(masked);

  CHECK(relex_mask(NULL, 0, 1, 2, 3, &masked) == RELEX_STATUS_NULL_ARGUMENT);
  return 0;
}
