"""Deployment arithmetic, forward-path equivalences and determinism."""
import numpy as np
import pytest

from xbarsim.circuit import ideal_mvm
from xbarsim.devices import (BinarizedModel, BitcellType, FabricConfig,
                             technology_by_name)
from xbarsim.mnist import Dataset
from xbarsim.pipeline import (deploy, evaluate, forward_analog, forward_digital,
                              forward_digital_batch, layer_currents)

MRAM = technology_by_name("MRAM")


def fabric(n, m, parasitics=False, bitcell=BitcellType.ZERO_T_1R, tech=MRAM):
    return FabricConfig(n, m, tech, bitcell, parasitics_enabled=parasitics)


def random_model(dims, seed=0):
    rng = np.random.default_rng(seed)
    weights = [rng.choice([-1, 1], size=(dims[k], dims[k + 1])).astype(np.int8)
               for k in range(len(dims) - 1)]
    return BinarizedModel(layer_dims=list(dims), weights=weights)


def random_dataset(n_images, n_pixels, seed=0):
    rng = np.random.default_rng(seed)
    return Dataset(images=rng.uniform(0, 1, size=(n_images, n_pixels)),
                   labels=rng.integers(0, 10, size=n_images).astype(np.uint8))


REFERENCE_DIMS = (400, 120, 84, 10)


def test_deploy_inventory_256():
    net = deploy(random_model(REFERENCE_DIMS),
                 fabric(256, 256, bitcell=BitcellType.ONE_T_1R))
    assert net.tile_counts == [2, 1, 1]
    assert net.inventory.neurons == 214
    assert net.inventory.demuxes == 1
    assert net.inventory.switches == 4


def test_deploy_inventory_32():
    net = deploy(random_model(REFERENCE_DIMS), fabric(32, 32))
    assert net.tile_counts == [104, 24, 3]
    assert net.inventory.demuxes == 12 * 8 + 3 * 6 + 2 * 1
    assert net.inventory.switches == 131


def test_deploy_exact_fit_no_demux():
    net = deploy(random_model((32, 16)), fabric(32, 32))
    assert net.tile_counts == [1]
    assert net.inventory.demuxes == 0
    assert net.inventory.switches == 1
    assert net.inventory.neurons == 16


def test_deploy_tile_shapes_match_spans():
    net = deploy(random_model((70, 20)), fabric(32, 32))
    for dt in net.layer_tiles[0]:
        assert dt.weights.shape == (dt.tile.n_rows, dt.tile.n_outputs)


def test_forward_digital_all_zero_image():
    model = random_model((6, 4, 3), seed=1)
    # zero input -> z = 0 everywhere -> hidden all ones (tie rule)
    hidden = np.ones(4, dtype=np.int64)
    z_out = hidden @ model.weights[1].astype(np.int64)
    assert forward_digital(model, np.zeros(6)) == int(np.argmax(z_out))


def test_analog_ideal_2x2_example():
    # weights [[+1,-1],[+1,+1]], both inputs driven: diff currents (+, 0)
    w = np.array([[1, -1], [1, 1]], dtype=np.int8)
    model = BinarizedModel(layer_dims=[2, 2], weights=[w])
    net = deploy(model, fabric(4, 4))
    i_plus, i_minus = layer_currents(net, 0, np.array([[1, 1]]))
    diff = (i_plus - i_minus)[0]
    assert diff[0] > 0
    assert diff[1] == 0.0
    # both neurons end up high: class = argmax = 0, digital agrees
    assert forward_analog(net, np.array([0.8, 0.8])) == 0
    assert forward_digital(model, np.array([1, 1])) == 0


def test_analog_ideal_equals_digital_on_batch():
    model = random_model(REFERENCE_DIMS, seed=2)
    data = random_dataset(100, 400, seed=3)
    quiet = MRAM.with_overrides(sigma_noise=0.0)
    net = deploy(model, fabric(64, 64, tech=quiet))
    bits = (data.images >= 0.5).astype(np.uint8)
    digital = forward_digital_batch(model, bits)
    report = evaluate(net, data, 100, seed=0)
    analog = np.array([forward_analog(net, v * 0.8) for v in bits[:20]])
    assert np.array_equal(analog, digital[:20])
    digital_acc = float(np.mean(digital == data.labels))
    assert report.accuracy == digital_acc


def test_partition_invariance_bit_exact():
    rng = np.random.default_rng(4)
    for trial in range(25):
        rows = int(rng.integers(1, 65))
        outs = int(rng.integers(1, 33))
        model = random_model((rows, outs), seed=trial + 10)
        bits = rng.integers(0, 2, size=(3, rows)).astype(np.uint8)

        whole = deploy(model, fabric(rows, 2 * outs))
        ip_ref, im_ref = layer_currents(whole, 0, bits)
        assert whole.tile_counts == [1]

        sub_n = int(rng.integers(1, rows + 1))
        sub_pairs = int(rng.integers(1, outs + 1))
        split = deploy(model, fabric(sub_n, 2 * sub_pairs))
        ip, im = layer_currents(split, 0, bits)
        assert np.array_equal(ip, ip_ref)
        assert np.array_equal(im, im_ref)


def test_ideal_currents_match_float_mvm():
    model = random_model((40, 8), seed=5)
    net = deploy(model, fabric(16, 8))
    rng = np.random.default_rng(6)
    bits = rng.integers(0, 2, size=(2, 40)).astype(np.uint8)
    ip, im = layer_currents(net, 0, bits)

    r_lo, r_hi = net.fabric.cell_resistances()
    w = model.weights[0]
    g_plus = np.where(w == 1, 1.0 / r_lo, 1.0 / r_hi)
    g_minus = np.where(w == 1, 1.0 / r_hi, 1.0 / r_lo)
    for b in range(2):
        ref_p, ref_m, _ = ideal_mvm(g_plus, g_minus, bits[b] * 0.8)
        assert np.allclose(ip[b], ref_p, rtol=1e-12)
        assert np.allclose(im[b], ref_m, rtol=1e-12)


def test_parasitic_split_recovers_current():
    # shorter wires per tile mean less IR loss: the chained split tile
    # delivers at least the unsplit tile's current on every line
    model = random_model((24, 4), seed=7)
    bits = np.ones((1, 24), dtype=np.uint8)
    whole = deploy(model, fabric(24, 8, parasitics=True))
    split = deploy(model, fabric(8, 8, parasitics=True))
    ip_w, im_w = layer_currents(whole, 0, bits)
    ip_s, im_s = layer_currents(split, 0, bits)
    assert ip_s.shape == ip_w.shape
    assert (ip_s >= ip_w).all()
    assert (im_s >= im_w).all()
    assert ip_s.sum() > ip_w.sum()


def test_evaluate_deterministic_across_jobs(reference_model, test_data):
    net = deploy(reference_model, fabric(64, 64, parasitics=True,
                                         bitcell=BitcellType.ONE_T_1R))
    r1 = evaluate(net, test_data, 150, seed=9, jobs=1)
    r4 = evaluate(net, test_data, 150, seed=9, jobs=4)
    assert r1.accuracy == r4.accuracy
    assert r1.power_total == r4.power_total
    assert r1.power_breakdown == r4.power_breakdown
    r1b = evaluate(net, test_data, 150, seed=9, jobs=1)
    assert r1b.accuracy == r1.accuracy and r1b.power_total == r1.power_total


def test_evaluate_noise_changes_with_seed(reference_model, test_data):
    tech = MRAM.with_overrides(sigma_noise=5e-3)
    net = deploy(reference_model, FabricConfig(64, 64, tech,
                                               parasitics_enabled=True))
    a = evaluate(net, test_data, 100, seed=1)
    b = evaluate(net, test_data, 100, seed=2)
    assert a.accuracy != b.accuracy  # strong noise, different draws


def test_power_increases_with_tile_count():
    model = random_model((64, 32, 10), seed=8)
    data = random_dataset(20, 64, seed=9)
    totals = {}
    periph = {}
    for n in (8, 16, 32, 64):
        net = deploy(model, fabric(n, n, parasitics=True))
        rep = evaluate(net, data, 20, seed=0)
        totals[n] = rep.power_total
        b = rep.power_breakdown
        periph[n] = b["neurons"] + b["demux"] + b["switches"]
        assert rep.power_total == pytest.approx(sum(b.values()))
        assert all(v >= 0 for v in b.values())
    assert totals[8] > totals[16] > totals[32] > totals[64]
    assert periph[8] > periph[16] > periph[32] > periph[64]


def test_evaluate_rejects_oversized_request(reference_model, test_data):
    net = deploy(reference_model, fabric(64, 64))
    with pytest.raises(ValueError):
        evaluate(net, test_data, len(test_data) + 1)
    with pytest.raises(ValueError):
        evaluate(net, test_data, 0)


def test_forward_analog_shape_check(reference_model):
    net = deploy(reference_model, fabric(64, 64))
    with pytest.raises(ValueError):
        forward_analog(net, np.zeros(100))


def test_report_csv_row(reference_model, test_data):
    net = deploy(reference_model, fabric(128, 128))
    rep = evaluate(net, test_data, 50, seed=0)
    row = rep.to_csv_row()
    fields = row.split(",")
    assert fields[0] == "50"
    assert fields[-1] == "/".join(str(t) for t in rep.tile_counts)
    assert len(fields) == len(rep.CSV_HEADER.split(","))
