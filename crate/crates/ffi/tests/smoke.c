#include <stdio.h>
#include "hmmrd.h"

int main(void) {
    HmmrdMesh *mesh = NULL;
    if (hmmrd_mesh_structured(4, &mesh) != HMMRD_STATUS_OK) return 1;
    size_t cells = 0, faces = 0, vertices = 0;
    hmmrd_mesh_counts(mesh, &cells, &faces, &vertices);
    if (cells != 32 || faces != 56 || vertices != 25) return 2;

    HmmrdSolver *solver = NULL;
    if (hmmrd_solver_new(mesh, 0.0, 1.0, 0.25, 0.25, &solver) != HMMRD_STATUS_OK) return 3;
    hmmrd_mesh_free(mesh);
    if (hmmrd_solver_run(solver, 0.01, 0.1) != HMMRD_STATUS_OK) {
        fprintf(stderr, "%s\n", hmmrd_last_error_message());
        return 4;
    }
    double eu = -1.0, ev = -1.0;
    hmmrd_solver_errors(solver, &eu, &ev, NULL, NULL);
    hmmrd_solver_free(solver);
    if (!(eu > 0.0 && eu < 1e-2 && ev > 0.0 && ev < 1e-2)) return 5;

    if (hmmrd_mesh_structured(0, &mesh) != HMMRD_STATUS_INVALID_ARGUMENT) return 6;
    printf("ok %s %.3e %.3e\n", hmmrd_version(), eu, ev);
    return 0;
}
