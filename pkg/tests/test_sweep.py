from turing_transformer.sweep import fit_growth, is_monotone, sweep_csv, sweep_quantization


def test_sweep_increment(inc):
    rows = sweep_quantization(inc, "1" * 99, levels=(16, 256, 4096))
    assert is_monotone(rows)
    assert all(r.bound_holds for r in rows)
    assert sweep_csv(rows).splitlines()[0].startswith("Q,first_disagreement_step")


def test_fits_report_both_models(bundled):
    rows = sweep_quantization(bundled["bit_flip"], "01" * 25)
    assert {f.model for f in fit_growth(rows)} == {"log", "linear"}
