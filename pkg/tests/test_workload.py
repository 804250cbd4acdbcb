import json

import pytest

from dcfrag.fixtures import UNIT_REF, category_spec
from dcfrag.topology import Reference, ResourceVector
from dcfrag.workload import (VM, Application, WorkloadError, WorkloadSpec, bw_between,
                             generate_workload, load_workload, representative_request,
                             validate_application)


def make_app(demands, traffic, reference=UNIT_REF, app_id="app"):
    vms = tuple(VM(id=v, demand=ResourceVector(*d)) for v, d in sorted(demands.items()))
    return Application(id=app_id, vms=vms, traffic=traffic, reference=reference)


class TestRepresentativeRequest:
    def test_mean_of_two_vms(self):
        app = make_app(
            {"v1": (0.2, 0.2, 0.2), "v2": (0.4, 0.4, 0.2)},
            {("v1", "v2"): 0.2},
        )
        req = representative_request(app)
        assert (req.cpu, req.mem) == (pytest.approx(0.3), pytest.approx(0.3))
        assert req.nw == pytest.approx(0.2)

    def test_single_vm_is_its_own_demand(self):
        app = make_app({"v1": (0.25, 0.5, 0.0)}, {})
        req = representative_request(app)
        assert (req.cpu, req.mem, req.nw) == (0.25, 0.5, 0.0)

    def test_empty_app_rejected(self):
        app = Application(id="empty", vms=(), traffic={}, reference=UNIT_REF)
        with pytest.raises(WorkloadError):
            representative_request(app)

    def test_category3_mean_close_to_table_values(self):
        import statistics

        spec = category_spec(3, app_count=150, seed=9)
        apps = generate_workload(spec)
        # VMs within an app share its traffic draw, so aggregate per app
        for target, dim in ((500.0, "cpu"), (700.0, "mem"), (100.0, "nic")):
            app_means = [
                sum(getattr(v.demand, dim) for v in a.vms) / len(a.vms) for a in apps
            ]
            mean = statistics.fmean(app_means)
            stderr = statistics.pstdev(app_means) / len(app_means) ** 0.5
            assert abs(mean - target) <= 3 * stderr + 0.02 * target, \
                f"{dim} mean {mean:.1f} not within 3 standard errors of {target}"


class TestBwBetween:
    def clique(self, n=4, bw=10.0):
        ids = [f"v{i}" for i in range(n)]
        traffic = {(a, b): bw for i, a in enumerate(ids) for b in ids[i + 1:]}
        return make_app({v: (0.1, 0.1, bw * (n - 1)) for v in ids}, traffic)

    def test_single_pair(self):
        app = make_app({"v1": (0.1, 0.1, 50.0), "v2": (0.1, 0.1, 50.0)},
                       {("v1", "v2"): 50.0})
        assert bw_between(app, {"v1"}, {"v2"}) == 50.0

    def test_empty_side_is_zero(self):
        app = self.clique()
        assert bw_between(app, {"v0", "v1"}, set()) == 0.0

    def test_clique_cross_edges(self):
        app = self.clique(4, 10.0)
        assert bw_between(app, {"v0", "v1"}, {"v2", "v3"}) == 40.0

    def test_symmetry_and_partition_additivity(self):
        app = self.clique(5, 7.0)
        xs = {"v0", "v1"}
        rest = {"v2", "v3", "v4"}
        assert bw_between(app, xs, rest) == bw_between(app, rest, xs)
        assert bw_between(app, xs, rest) == pytest.approx(
            bw_between(app, xs, {"v2"}) + bw_between(app, xs, {"v3", "v4"}))

    def test_overlap_rejected(self):
        app = self.clique()
        with pytest.raises(WorkloadError, match="overlap"):
            bw_between(app, {"v0", "v1"}, {"v1", "v2"})


class TestGenerator:
    def test_seeded_determinism(self):
        spec = category_spec(1, app_count=10, seed=7)
        a = generate_workload(spec)
        b = generate_workload(spec)
        assert [(x.id, x.vms, sorted(x.traffic.items())) for x in a] == \
               [(x.id, x.vms, sorted(x.traffic.items())) for x in b]

    def test_different_seeds_differ(self):
        a = generate_workload(category_spec(1, app_count=5, seed=1))
        b = generate_workload(category_spec(1, app_count=5, seed=2))
        assert [x.vms for x in a] != [x.vms for x in b]

    def test_category2_traffic_skew(self):
        # pooled over the workload, the top 10% of edges carry >= 80% of traffic
        for seed in range(10):
            apps = generate_workload(category_spec(2, app_count=25, seed=seed))
            weights = sorted((bw for a in apps for bw in a.traffic.values()),
                             reverse=True)
            top = weights[:max(1, len(weights) // 10)]
            assert sum(top) >= 0.8 * sum(weights), f"seed {seed} not skewed enough"

    def test_category3_sizes_within_range(self):
        apps = generate_workload(category_spec(3, app_count=15, seed=3))
        assert all(10 <= len(a.vms) <= 15 for a in apps)

    def test_generated_apps_pass_invariants(self):
        for category in (1, 2, 3):
            for app in generate_workload(category_spec(category, app_count=8, seed=5)):
                validate_application(app)
                for v in app.vms:
                    assert v.demand.nic == pytest.approx(app.total_traffic(v.id))

    def test_degenerate_range_rejected(self):
        with pytest.raises(WorkloadError):
            WorkloadSpec(category=1, app_count=1, vms_per_app=(5, 2),
                         mean_demand=ResourceVector(1, 1, 1), traffic_density=0.5,
                         seed=0, reference=UNIT_REF)


class TestLoader:
    def doc(self):
        return {
            "apps": [
                {
                    "id": "a",
                    "vms": [{"id": "v1", "cpu_mhz": 100, "mem_mb": 100},
                            {"id": "v2", "cpu_mhz": 100, "mem_mb": 100},
                            {"id": "v3", "cpu_mhz": 100, "mem_mb": 100}],
                    "edges": [{"a": "v1", "b": "v2", "mbps": 40},
                              {"a": "v3", "b": "v2", "mbps": 10}],
                },
                {
                    "id": "b",
                    "vms": [{"id": "v1", "cpu_mhz": 50, "mem_mb": 50,
                             "nic_mbps": 200},
                            {"id": "v2", "cpu_mhz": 50, "mem_mb": 50},
                            {"id": "v3", "cpu_mhz": 50, "mem_mb": 50}],
                    "edges": [{"a": "v1", "b": "v2", "mbps": 25}],
                },
            ]
        }

    def ref(self):
        return Reference(host=ResourceVector(1000, 1000, 1000), link=1000)

    def load(self, tmp_path, doc):
        path = tmp_path / "wl.json"
        path.write_text(json.dumps(doc))
        return load_workload(str(path), self.ref())

    def test_two_apps_with_three_vms(self, tmp_path):
        apps = self.load(tmp_path, self.doc())
        assert [a.id for a in apps] == ["a", "b"]
        assert all(len(a.vms) == 3 for a in apps)

    def test_edges_symmetrized_and_nic_derived(self, tmp_path):
        apps = self.load(tmp_path, self.doc())
        a = apps[0]
        assert a.traffic == {("v1", "v2"): 40.0, ("v2", "v3"): 10.0}
        assert a.total_traffic("v2") == 50.0
        assert a.vm("v2").demand.nic == 50.0      # derived from rows
        assert apps[1].vm("v1").demand.nic == 200.0  # declared wins

    def test_unknown_vm_rejected_with_diagnostic(self, tmp_path):
        doc = self.doc()
        doc["apps"][0]["edges"].append({"a": "v1", "b": "ghost", "mbps": 5})
        with pytest.raises(WorkloadError, match=r"apps\[0\].*edges\[2\].*ghost"):
            self.load(tmp_path, doc)

    def test_duplicate_edge_rejected(self, tmp_path):
        doc = self.doc()
        doc["apps"][0]["edges"].append({"a": "v2", "b": "v1", "mbps": 5})
        with pytest.raises(WorkloadError, match="duplicate"):
            self.load(tmp_path, doc)

    def test_self_edge_rejected(self, tmp_path):
        doc = self.doc()
        doc["apps"][0]["edges"].append({"a": "v1", "b": "v1", "mbps": 5})
        with pytest.raises(WorkloadError, match="self-edge"):
            self.load(tmp_path, doc)

    def test_declared_nic_below_rows_rejected(self, tmp_path):
        doc = self.doc()
        doc["apps"][0]["vms"][0]["nic_mbps"] = 10  # v1 carries 40
        with pytest.raises(WorkloadError, match="NIC demand"):
            self.load(tmp_path, doc)

    def test_demand_above_reference_rejected(self, tmp_path):
        doc = self.doc()
        doc["apps"][0]["vms"][0]["cpu_mhz"] = 2000
        with pytest.raises(WorkloadError, match="exceeds"):
            self.load(tmp_path, doc)

    def test_empty_app_rejected(self, tmp_path):
        doc = {"apps": [{"id": "a", "vms": [], "edges": []}]}
        with pytest.raises(WorkloadError, match="no VMs"):
            self.load(tmp_path, doc)
