#ifndef ANONELECT_H
#define ANONELECT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum AeStatus {
  AE_STATUS_OK = 0,
  AE_STATUS_NULL_POINTER = 1,
  AE_STATUS_INVALID_UTF8 = 2,
  AE_STATUS_PARSE_ERROR = 3,
  AE_STATUS_INFEASIBLE = 4,
  AE_STATUS_BUFFER_TOO_SMALL = 5,
  AE_STATUS_INVALID_ARGUMENT = 6,
  /*
   No solution up to `max_k`.
   */
  AE_STATUS_NOT_FOUND = 7,
  AE_STATUS_BUDGET_EXCEEDED = 8,
} AeStatus;

/*
 Task ids accepted by [`ae_election_index`].
 */
typedef enum AeTask {
  AE_TASK_SELECTION = 0,
  AE_TASK_PORT_ELECTION = 1,
  AE_TASK_PORT_PATH_ELECTION = 2,
  AE_TASK_COMPLETE_PORT_PATH_ELECTION = 3,
} AeTask;

/*
 Opaque graph handle.
 */
typedef struct AeGraph AeGraph;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message for the last failed call on this thread; empty if none. Valid until the
 next call on the same thread.
 */
const char *ae_last_error(void);

/*
 Parses PLG text into a new handle stored in `*out`.

 # Safety
 `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum AeStatus ae_graph_parse(const char *text, struct AeGraph **out);

/*
 Releases a handle; null is ignored.

 # Safety
 `g` must come from [`ae_graph_parse`] and not be used afterwards.
 */
void ae_graph_free(struct AeGraph *g);

/*
 # Safety
 `g` must be a live handle and `out` a valid pointer.
 */
enum AeStatus ae_graph_node_count(const struct AeGraph *g, size_t *out);

/*
 Serializes to PLG text; free the result with [`ae_string_free`].

 # Safety
 `g` must be a live handle and `out` a valid pointer.
 */
enum AeStatus ae_graph_serialize(const struct AeGraph *g, char **out);

/*
 # Safety
 `s` must come from this library and not be used afterwards; null is ignored.
 */
void ae_string_free(char *s);

/*
 Whether all views are pairwise distinct.

 # Safety
 `g` must be a live handle and `out` a valid pointer.
 */
enum AeStatus ae_is_feasible(const struct AeGraph *g, bool *out);

/*
 Writes the depth-`depth` class of every node to `classes[0..n]`.

 # Safety
 `g` must be a live handle and `classes` valid for `len` writes.
 */
enum AeStatus ae_refine_classes(const struct AeGraph *g,
                                size_t depth,
                                uint32_t *classes,
                                size_t len);

/*
 Least depth at which some node has a unique view.

 # Safety
 `g` must be a live handle and `out` a valid pointer.
 */
enum AeStatus ae_s_index(const struct AeGraph *g, size_t *out);

/*
 Brute-force election index of `task`, with the elected node.

 # Safety
 `g` must be a live handle; `k_out` and `leader_out` valid pointers.
 */
enum AeStatus ae_election_index(const struct AeGraph *g,
                                enum AeTask task,
                                size_t max_k,
                                uint64_t budget,
                                size_t *k_out,
                                size_t *leader_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ANONELECT_H */
