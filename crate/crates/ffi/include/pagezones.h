#ifndef PAGEZONES_H
#define PAGEZONES_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PzStatus {
  PZ_STATUS_OK = 0,
  PZ_STATUS_NULL_ARGUMENT = 1,
  PZ_STATUS_INVALID_UTF8 = 2,
  PZ_STATUS_PARSE_ERROR = 3,
  PZ_STATUS_CONFIG_ERROR = 4,
  PZ_STATUS_INVALID_INPUT = 5,
  PZ_STATUS_UNDEFINED = 6,
  PZ_STATUS_SEGMENT_TOO_LONG = 7,
  PZ_STATUS_IO = 8,
  PZ_STATUS_PANIC = 9,
} PzStatus;

/**
 * Opaque region selector rule set.
 */
typedef struct PzRuleSet PzRuleSet;

/**
 * Opaque pixel confusion tally.
 */
typedef struct PzTally PzTally;

typedef struct PzPixelMetrics {
  double p_acc;
  double m_acc;
  double m_iu;
  double f_iu;
} PzPixelMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Owned by the
 * library; valid until the next failing call on this thread.
 */
const char *pz_last_error(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library, not yet freed.
 */
void pz_string_free(char *s);

/**
 * Bundled rule set by name (`dta`, `tcp`, `wwo`).
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out` must be writable.
 */
enum PzStatus pz_rules_builtin(const char *name, struct PzRuleSet **out);

/**
 * Rule set from TOML source.
 *
 * # Safety
 * `toml` must be a NUL-terminated string; `out` must be writable.
 */
enum PzStatus pz_rules_from_toml(const char *toml, struct PzRuleSet **out);

/**
 * # Safety
 * `rules` must be null or a handle from this library, not yet freed.
 */
void pz_rules_free(struct PzRuleSet *rules);

/**
 * Page records of one TEI edition as ndjson, written to `*out`.
 *
 * # Safety
 * `xml` must point to `len` readable bytes; string arguments must be
 * NUL-terminated; `out` must be writable.
 */
enum PzStatus pz_extract_ndjson(const struct PzRuleSet *rules,
                                const uint8_t *xml,
                                size_t len,
                                const char *edition_id,
                                char **out);

/**
 * Text normalized with the default character map.
 *
 * # Safety
 * `text` must be NUL-terminated; `out` must be writable.
 */
enum PzStatus pz_normalize_text(const char *text, char **out);

/**
 * Share of aligned matching characters relative to the longer text, with
 * default alignment parameters.
 *
 * # Safety
 * `a` and `b` must be NUL-terminated; `out` must be writable.
 */
enum PzStatus pz_score_page_pair(const char *a, const char *b, double *out);

/**
 * Empty confusion tally over all region classes plus background.
 */
struct PzTally *pz_tally_new(void);

/**
 * Add one reference/prediction page pair, both as annotation JSON.
 *
 * # Safety
 * `tally` must be a live handle; JSON arguments must be NUL-terminated.
 */
enum PzStatus pz_tally_add_page(struct PzTally *tally,
                                const char *reference_json,
                                const char *predicted_json,
                                uint32_t scale);

/**
 * Add the counts of `from` into `into`.
 *
 * # Safety
 * Both must be live handles.
 */
enum PzStatus pz_tally_merge(struct PzTally *into, const struct PzTally *from);

/**
 * # Safety
 * `tally` must be a live handle; `out` must be writable.
 */
enum PzStatus pz_tally_metrics(const struct PzTally *tally,
                               bool exclude_background,
                               struct PzPixelMetrics *out);

/**
 * # Safety
 * `tally` must be null or a live handle.
 */
void pz_tally_free(struct PzTally *tally);

/**
 * Pearson correlation of `n` pairs with its two-sided p-value.
 *
 * # Safety
 * `x` and `y` must point to `n` doubles; `r` and `p_value` must be writable.
 */
enum PzStatus pz_pearson(const double *x, const double *y, size_t n, double *r, double *p_value);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PAGEZONES_H */
