#ifndef PROSODY_COREF_H
#define PROSODY_COREF_H

#include <stddef.h>
#include <stdint.h>

/*
 Values accepted for `source` arguments.
 */
enum PcLabelSource
#ifdef __cplusplus
  : int32_t
#endif // __cplusplus
 {
  PC_LABEL_SOURCE_GOLD = 0,
  PC_LABEL_SOURCE_PRED = 1,
};
#ifndef __cplusplus
typedef int32_t PcLabelSource;
#endif // __cplusplus

/*
 Values accepted for `prosody_feature` arguments.
 */
enum PcProsodyFeature
#ifdef __cplusplus
  : int32_t
#endif // __cplusplus
 {
  PC_PROSODY_FEATURE_NONE = 0,
  PC_PROSODY_FEATURE_ACCENT = 1,
  PC_PROSODY_FEATURE_NUCLEAR = 2,
};
#ifndef __cplusplus
typedef int32_t PcProsodyFeature;
#endif // __cplusplus

/*
 Values accepted for `scope` arguments.
 */
enum PcScope
#ifdef __cplusplus
  : int32_t
#endif // __cplusplus
 {
  PC_SCOPE_SHORT = 0,
  PC_SCOPE_ALL = 1,
};
#ifndef __cplusplus
typedef int32_t PcScope;
#endif // __cplusplus

/*
 Result code of every fallible call.
 */
enum PcStatus
#ifdef __cplusplus
  : int32_t
#endif // __cplusplus
 {
  PC_STATUS_OK = 0,
  PC_STATUS_NULL_ARGUMENT = 1,
  PC_STATUS_INVALID_UTF8 = 2,
  PC_STATUS_IO = 3,
  PC_STATUS_PARSE = 4,
  PC_STATUS_AUDIO = 5,
  PC_STATUS_MODEL_FORMAT = 6,
  PC_STATUS_INVALID_ARGUMENT = 7,
  PC_STATUS_MISSING_DATA = 8,
  PC_STATUS_PANIC = 9,
};
#ifndef __cplusplus
typedef int32_t PcStatus;
#endif // __cplusplus

/*
 A trained coreference model.
 */
typedef struct PcCorefModel PcCorefModel;

/*
 Corpus documents with their annotations.
 */
typedef struct PcCorpus PcCorpus;

/*
 A trained pitch-accent or boundary detector.
 */
typedef struct PcProsodyModel PcProsodyModel;

/*
 Corpus-level scores; precision, recall and F1 in [0, 1], conll in [0, 100].
 */
typedef struct PcScore {
  double muc_p;
  double muc_r;
  double muc_f;
  double b3_p;
  double b3_r;
  double b3_f;
  double ceafe_p;
  double ceafe_r;
  double ceafe_f;
  double conll;
} PcScore;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message for the last failing call on this thread; empty after a success.
 The pointer stays valid until the next call on this thread.
 */
const char *pc_last_error(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *pc_version(void);

/*
 Parses a corpus TSV. `manifest` may be null; otherwise it maps document
 ids to WAV files for the detector.

 # Safety
 `path` and a non-null `manifest` must be NUL-terminated strings; `out`
 must be writable.
 */
PcStatus pc_corpus_load(const char *path, const char *manifest, struct PcCorpus **out);

/*
 Writes the corpus in canonical TSV form.

 # Safety
 `corpus` must be a live handle and `path` a NUL-terminated string.
 */
PcStatus pc_corpus_save(const struct PcCorpus *corpus, const char *path);

/*
 Number of documents; 0 for a null handle.

 # Safety
 `corpus` must be null or a live handle.
 */
uintptr_t pc_corpus_document_count(const struct PcCorpus *corpus);

/*
 Number of tokens in document `doc`.

 # Safety
 `corpus` must be a live handle and `out` writable.
 */
PcStatus pc_corpus_token_count(const struct PcCorpus *corpus, uintptr_t doc, uintptr_t *out);

/*
 # Safety
 `corpus` must be null or a handle not yet freed.
 */
void pc_corpus_free(struct PcCorpus *corpus);

/*
 Loads a detector model file.

 # Safety
 `path` must be a NUL-terminated string and `out` writable.
 */
PcStatus pc_prosody_model_load(const char *path, struct PcProsodyModel **out);

/*
 # Safety
 `model` must be null or a handle not yet freed.
 */
void pc_prosody_model_free(struct PcProsodyModel *model);

/*
 Runs the detector over every document's audio and stores the decisions
 in the prediction column of the model's event kind.

 # Safety
 Both handles must be live.
 */
PcStatus pc_prosody_annotate(const struct PcProsodyModel *model, struct PcCorpus *corpus);

/*
 Trains a coreference model on the corpus's gold chains.
 `prosody_feature`, `scope` and `source` take `PcProsodyFeature`,
 `PcScope` and `PcLabelSource` values.

 # Safety
 `corpus` must be a live handle and `out` writable.
 */
PcStatus pc_coref_train(const struct PcCorpus *corpus,
                        int32_t prosody_feature,
                        int32_t scope,
                        int32_t source,
                        uint32_t epochs,
                        uint64_t seed,
                        struct PcCorefModel **out);

/*
 # Safety
 `path` must be a NUL-terminated string and `out` writable.
 */
PcStatus pc_coref_model_load(const char *path, struct PcCorefModel **out);

/*
 # Safety
 `model` must be a live handle and `path` a NUL-terminated string.
 */
PcStatus pc_coref_model_save(const struct PcCorefModel *model, const char *path);

/*
 # Safety
 `model` must be null or a handle not yet freed.
 */
void pc_coref_model_free(struct PcCorefModel *model);

/*
 Replaces the corpus's chains with the model's predictions. `source`
 selects the labels feeding the prosodic feature (`PcLabelSource`).

 # Safety
 Both handles must be live.
 */
PcStatus pc_coref_predict(const struct PcCorefModel *model,
                          struct PcCorpus *corpus,
                          int32_t source);

/*
 Scores `response` chains against `key` chains.

 # Safety
 Both handles must be live and `out` writable.
 */
PcStatus pc_score(const struct PcCorpus *key, const struct PcCorpus *response, struct PcScore *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PROSODY_COREF_H */
