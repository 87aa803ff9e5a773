#ifndef BRAIDLIKE_H
#define BRAIDLIKE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum BlBehavior {
  BL_BEHAVIOR_ACCEPT = 0,
  BL_BEHAVIOR_REJECT = 1,
  BL_BEHAVIOR_LOOP_FOREVER = 2,
} BlBehavior;

/**
 * Result of every call.
 */
typedef enum BlStatus {
  BL_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  BL_STATUS_NULL_ARGUMENT = 1,
  /**
   * A string argument was not UTF-8.
   */
  BL_STATUS_INVALID_UTF8 = 2,
  /**
   * Program or machine text did not parse.
   */
  BL_STATUS_PARSE = 3,
  /**
   * The arguments do not fit the operation, such as a nondeterministic
   * machine given to the deterministic decider or a short buffer.
   */
  BL_STATUS_INVALID = 4,
  /**
   * An internal consistency check failed.
   */
  BL_STATUS_INVARIANT = 5,
  /**
   * A result does not fit the output type.
   */
  BL_STATUS_OVERFLOW = 6,
  /**
   * The library panicked; the handle involved should be freed.
   */
  BL_STATUS_PANIC = 7,
} BlStatus;

/**
 * Opaque braidlike machine.
 */
typedef struct BlMachine BlMachine;

/**
 * Opaque counter program.
 */
typedef struct BlProgram BlProgram;

typedef struct BlRunResult {
  bool halted;
  uint64_t steps;
  /**
   * Instruction about to run, or -1 once halted.
   */
  int64_t pc;
} BlRunResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *bl_last_error(void);

/**
 * Releases a string returned by the library. Null is ignored.
 *
 * # Safety
 * `s` must be null or a string from this library not yet freed.
 */
void bl_string_free(char *s);

/**
 * Parses `.cm` source into a new program handle.
 *
 * # Safety
 * `source` must be a NUL-terminated string and `out` valid for writes.
 */
enum BlStatus bl_program_parse(const char *source, struct BlProgram **out);

/**
 * # Safety
 * `program` must be null or a handle from [`bl_program_parse`] not yet
 * freed.
 */
void bl_program_free(struct BlProgram *program);

/**
 * Number of counters, which is the length [`bl_program_run`] needs.
 *
 * # Safety
 * `program` must be a live handle and `out` valid for writes.
 */
enum BlStatus bl_program_num_counters(const struct BlProgram *program, size_t *out);

/**
 * Runs the program for at most `max_steps` steps from its initial counters.
 * The final counters are copied to `counters`, which holds `counters_len`
 * values; pass null with length 0 to skip them.
 *
 * # Safety
 * `program` must be a live handle, `out` valid for writes, and `counters`
 * valid for `counters_len` writes unless null.
 */
enum BlStatus bl_program_run(const struct BlProgram *program,
                             uint64_t max_steps,
                             struct BlRunResult *out,
                             uint64_t *counters,
                             size_t counters_len);

/**
 * Compiles the program and returns the level as JSON.
 *
 * # Safety
 * `program` must be a live handle and `out` valid for writes.
 */
enum BlStatus bl_program_level_json(const struct BlProgram *program, char **out);

/**
 * Runs the program against its compiled level for up to `max_steps`
 * steps. `pass` is set when every instruction boundary matched and the
 * level was solved exactly when the program halted; `report_json`, if not
 * null, receives the full report.
 *
 * # Safety
 * `program` must be a live handle, `pass` valid for writes, and
 * `report_json` null or valid for writes.
 */
enum BlStatus bl_program_bisimulate(const struct BlProgram *program,
                                    uint64_t max_steps,
                                    bool *pass,
                                    char **report_json);

/**
 * Parses `.btm` source into a new machine handle.
 *
 * # Safety
 * `source` must be a NUL-terminated string and `out` valid for writes.
 */
enum BlStatus bl_machine_parse(const char *source, struct BlMachine **out);

/**
 * # Safety
 * `machine` must be null or a handle from [`bl_machine_parse`] not yet
 * freed.
 */
void bl_machine_free(struct BlMachine *machine);

/**
 * Decides a deterministic machine started on the blank tape.
 *
 * # Safety
 * `machine` must be a live handle and `out` valid for writes.
 */
enum BlStatus bl_machine_decide(const struct BlMachine *machine, enum BlBehavior *out);

/**
 * Decides a deterministic read-only machine on `input[0..len]`.
 *
 * # Safety
 * `machine` must be a live handle, `input` valid for `len` reads (or null
 * with `len` 0), and `out` valid for writes.
 */
enum BlStatus bl_machine_decide_read_only(const struct BlMachine *machine,
                                          const uint32_t *input,
                                          size_t len,
                                          enum BlBehavior *out);

/**
 * Decides whether the machine can enter its target state.
 *
 * # Safety
 * `machine` must be a live handle and `reached` valid for writes.
 */
enum BlStatus bl_machine_reach(const struct BlMachine *machine, bool prune, bool *reached);

/**
 * Tour-guide bounds for `states` states. Fails with `Overflow` when a bound
 * does not fit in 64 bits.
 *
 * # Safety
 * `det` and `nondet` must be valid for writes.
 */
enum BlStatus bl_guide_bounds(size_t states, uint64_t *det, uint64_t *nondet);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BRAIDLIKE_H */
