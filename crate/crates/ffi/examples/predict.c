/* Classifies a synthetic sequence with a randomly initialized model.
 *
 *   cc -Icrates/ffi/include crates/ffi/examples/predict.c target/release/libddnet_ffi.a \
 *       -lm -lpthread -ldl -o predict
 */
#include <stdio.h>
#include <stdlib.h>

#include "ddnet.h"

#define JOINTS 22
#define DIM 3
#define FRAMES 40
#define CLASSES 14

static int report(DdnetStatus st, const char *what) {
    char msg[256];
    if (st == DDNET_STATUS_OK) return 0;
    ddnet_last_error_message(msg, sizeof msg);
    fprintf(stderr, "%s failed (%d): %s\n", what, (int)st, msg);
    return 1;
}

int main(void) {
    static float coords[FRAMES * JOINTS * DIM];
    float probs[CLASSES];
    uint32_t cls = 0;
    DdnetModel *model = NULL;
    size_t i;

    for (i = 0; i < sizeof coords / sizeof coords[0]; i++)
        coords[i] = (float)((i * 37) % 101) / 50.0f - 1.0f;

    if (report(ddnet_model_new(JOINTS, DIM, CLASSES, 16, 7, &model), "model_new")) return 1;
    if (report(ddnet_model_predict(model, coords, FRAMES, JOINTS, DIM, &cls, probs, CLASSES), "predict")) {
        ddnet_model_free(model);
        return 1;
    }
    printf("class %u p=%.6f params=%llu\n", cls, probs[cls],
           (unsigned long long)ddnet_model_param_count(model));
    ddnet_model_free(model);
    return 0;
}
