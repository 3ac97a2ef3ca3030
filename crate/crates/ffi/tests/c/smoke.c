#include <stdio.h>
#include <string.h>
#include "namoplan.h"

int main(void) {
    NamoTask *task = NULL;
    if (namo_task_generate(8, 3, &task) != NAMO_STATUS_OK) return 1;
    char *json = NULL;
    if (namo_plan(task, NULL, "pure", 5.0, 0, &json) != NAMO_STATUS_OK) return 2;
    if (strstr(json, "\"method\":\"pure\"") == NULL) return 3;
    namo_string_free(json);
    if (namo_plan(task, NULL, "nope", 5.0, 0, &json) != NAMO_STATUS_INVALID_ARGUMENT) return 4;
    char *err = namo_last_error();
    if (err == NULL) return 5;
    namo_string_free(err);
    namo_task_free(task);
    printf("ok %s\n", namo_version());
    return 0;
}
