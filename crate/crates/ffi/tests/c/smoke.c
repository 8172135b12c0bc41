#include <stdio.h>
#include "quadroth.h"

int main(void) {
    uint64_t w = 0;
    if (qr_compute_w(5, &w) != QR_STATUS_OK || w != 120) return 1;

    QrWParams *p = NULL;
    if (qr_wparams_new(1000, 3, 1, 23, &p) != QR_STATUS_OK) return 2;
    QrMajorant *m = NULL;
    if (qr_majorant_new(p, &m) != QR_STATUS_OK) return 3;
    if (qr_majorant_len(m) != 41667) return 4;

    QrWParams *bad = NULL;
    if (qr_wparams_new(1000, 3, 1, 3, &bad) != QR_STATUS_INVALID_ARGUMENT) return 5;
    if (qr_last_error_message() == NULL) return 6;

    int64_t c[] = {1, 1, -2};
    uint64_t n = 0;
    QrRadoStatus st;
    if (qr_rado_number(c, 3, 1, 100, 0, 0, &n, &st) != QR_STATUS_OK) return 7;
    if (st != QR_RADO_STATUS_REGULAR_AT_N || n != 7) return 8;

    qr_majorant_free(m);
    qr_wparams_free(p);
    printf("ok\n");
    return 0;
}
