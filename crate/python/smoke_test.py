"""Smoke test for the capsense extension module.

Build and run:
    cargo build -p capsense-py --release --features extension-module
    cp target/release/libcapsense.so python/capsense.so
    python3 python/smoke_test.py
"""

import math

import capsense


def main():
    cfc = capsense.CfcConfig()
    t = capsense.cycle_time_analytic(cfc, 120e-12)
    expected = 2 * 5.0 / (3 * 40e-6) * 120e-12
    assert math.isclose(t, expected, rel_tol=1e-12), (t, expected)

    rows = capsense.sweep_transfer(cfc, [18e-12, 100e-12, 1e-9])
    assert len(rows) == 3 and rows[0][2] > rows[-1][2]

    sim = capsense.simulate_transient(cfc, 120e-12, t / 1000, 20)
    assert abs(sim["mean_cycle_time"] / t - 1) < 1e-3

    bridge = capsense.AccelHalfBridge()
    chopper = capsense.ChopperConfig()
    r = capsense.run_chain(chopper, bridge, 1.0)
    assert abs(r.dc_out / r.expected_dc - 1) < 1e-3, (r.dc_out, r.expected_dc)
    print(f"dc_out at 1 g: {r.dc_out * 1e3:.3f} mV")

    w = capsense.sine(1e4, 10_000, math.sqrt(2), 50.0)
    assert abs(w.rms() - 1) < 1e-9
    freqs, psd = capsense.estimate_psd(w, 1024)
    peak = freqs[max(range(len(psd)), key=psd.__getitem__)]
    assert abs(peak - 50.0) < 2 * (freqs[1] - freqs[0])

    s = capsense.stats([1.0, 2.0, 3.0])
    assert math.isclose(s["mean"], 2.0) and math.isclose(s["std"], 1.0)

    try:
        capsense.CfcConfig(v_supply=-1.0)
    except ValueError as e:
        print(f"rejected bad config: {e}")
    else:
        raise AssertionError("negative supply accepted")

    print("smoke test ok")


if __name__ == "__main__":
    main()
