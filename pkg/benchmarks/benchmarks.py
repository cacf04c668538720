# type: ignore

from manifold_repair import (
    Dissimilarity,
    ManifoldKind,
    ManifoldSpec,
    Neighborhood,
    check_metric,
    classical_mds,
    corrupt_distances_gaussian,
    generate,
    geodesic_distances,
    iomr_fixed_pass,
    knn_graph,
    largest_component,
    mask_uniform_fraction,
    masked_euclidean,
    repair_to_fixpoint,
)


def _swiss_roll_distances(n):
    data, _ = generate(ManifoldSpec(kind=ManifoldKind.SWISS_ROLL, n=n, seed=0))
    return Dissimilarity.from_points(data.values)


class MaskedSuite:
    params = [200, 1000]
    param_names = ["n"]

    def setup(self, n):
        data, _ = generate(ManifoldSpec(kind=ManifoldKind.M1, n=n, seed=0))
        self.data = mask_uniform_fraction(data, 0.4, seed=0)

    def time_masked_euclidean(self, n):
        masked_euclidean(self.data, warn=False)


class RepairSuite:
    params = [100, 300]
    param_names = ["n"]

    def setup(self, n):
        clean = _swiss_roll_distances(n)
        self.noisy = corrupt_distances_gaussian(clean, 0.1, seed=0)

    def time_single_pass(self, n):
        iomr_fixed_pass(self.noisy)

    def time_fixpoint(self, n):
        repair_to_fixpoint(self.noisy, max_iters=50)

    def time_check_metric(self, n):
        check_metric(self.noisy, max_violations=0)


class IsomapSuite:
    params = [300, 1000]
    param_names = ["n"]

    def setup(self, n):
        self.d = _swiss_roll_distances(n)
        self.graph = knn_graph(self.d, 10)
        self.geo = geodesic_distances(self.graph)
        self.square, _ = largest_component(self.geo)

    def time_knn_graph(self, n):
        knn_graph(self.d, 10)

    def time_floyd_warshall(self, n):
        geodesic_distances(self.graph)

    def time_classical_mds(self, n):
        classical_mds(self.square, 2)

    def peakmem_neighborhood(self, n):
        Neighborhood.knn(10).build(self.d)
