#include <stdio.h>
#include <string.h>

#include "phinote.h"

int main(void) {
    char *out = NULL;
    if (phinote_shift_date("5/13/10", 18, "2010-05-20", &out) != PHINOTE_STATUS_OK) {
        return 1;
    }
    printf("%s|", out);
    phinote_string_free(out);

    PhinoteDeidEngine *engine = NULL;
    PhinoteStatus status = phinote_deid_engine_new(NULL, 1, PHINOTE_STYLE_SURROGATE, &engine);
    if (status != PHINOTE_STATUS_INVALID_ARGUMENT || engine != NULL) {
        return 2;
    }
    char *msg = phinote_last_error();
    if (msg == NULL || strlen(msg) == 0) {
        return 3;
    }
    printf("invalid|");
    phinote_string_free(msg);

    if (strlen(phinote_version()) == 0) {
        return 4;
    }
    phinote_deid_engine_free(NULL);
    printf("ok\n");
    return 0;
}
