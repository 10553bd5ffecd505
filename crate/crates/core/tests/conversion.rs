use approx::assert_abs_diff_eq;

use foldflash::metrics::{analyze_spectrum, dnl_inl_sine, Window};
use foldflash::signal::{coherent_frequency, dbfs_to_amplitude, gen_sine, WaveformMeta};
use foldflash::{AdcConfig, FoldingFlashAdc, Waveform};

const FS: f64 = 1e9;

fn sine(dbfs: f64, target: f64, n: usize) -> Waveform {
    let f = coherent_frequency(FS, n, target).unwrap();
    gen_sine(dbfs_to_amplitude(dbfs, 0.5), f, FS, n, 0.0, 0.5).unwrap()
}

fn sndr(cfg: AdcConfig, w: &Waveform) -> f64 {
    let codes = FoldingFlashAdc::new(cfg).unwrap().convert(w).unwrap().values_f64();
    analyze_spectrum(&codes, Window::Rectangular).unwrap().sndr_db
}

#[test]
fn csv_waveform_converts_like_the_original() {
    let w = sine(-0.5, 100e6, 1024);
    let mut buf = Vec::new();
    w.write_csv(&mut buf).unwrap();
    let back = Waveform::read_csv(buf.as_slice(), WaveformMeta { sample_period: 1.0 / FS, full_scale: 0.5 }).unwrap();
    let cfg = AdcConfig::ideal(FS).unwrap();
    let a = FoldingFlashAdc::new(cfg.clone()).unwrap().convert(&w).unwrap();
    let b = FoldingFlashAdc::new(cfg).unwrap().convert(&back).unwrap();
    assert_eq!(a, b);
}

#[test]
fn overdriven_sine_histogram_is_linear_for_the_ideal_converter() {
    // the stimulus record carries a wider full scale so it may overdrive the converter
    let f = coherent_frequency(FS, 1 << 16, 10e6).unwrap();
    let w = gen_sine(0.27, f, FS, 1 << 16, 0.0, 0.6).unwrap();
    let codes = FoldingFlashAdc::new(AdcConfig::ideal(FS).unwrap()).unwrap().convert(&w).unwrap().values();
    let lin = dnl_inl_sine(&codes).unwrap();
    assert!(lin.max_abs_dnl < 0.05, "{lin:?}");
    assert!(lin.max_abs_inl < 0.05, "{lin:?}");
    assert_abs_diff_eq!(lin.inl[0], 0.0);
    assert_abs_diff_eq!(*lin.inl.last().unwrap(), 0.0, epsilon = 1e-12);
}

#[test]
fn slower_settling_costs_sndr_at_high_frequency() {
    let w = sine(-0.5, 499e6, 4096);
    let mut last = f64::INFINITY;
    for tau in [0.0, 50e-12, 150e-12, 400e-12] {
        let mut cfg = AdcConfig::ideal(FS).unwrap();
        cfg.frontend.settling_tau = tau;
        let s = sndr(cfg, &w);
        assert!(s <= last + 0.05, "tau {tau}: {s} after {last}");
        last = s;
    }
    assert!(last < 20.0, "{last}");
}

#[test]
fn comparator_noise_degrades_sndr() {
    let w = sine(-0.5, 100e6, 4096);
    let clean = sndr(AdcConfig::ideal(FS).unwrap(), &w);
    let mut cfg = AdcConfig::ideal(FS).unwrap();
    cfg.bank.noise_sigma = 10e-3;
    cfg.seed = 3;
    let noisy = sndr(cfg, &w);
    assert!(noisy < clean - 2.0, "{clean} -> {noisy}");
}

#[test]
fn hann_and_rectangular_agree_on_a_coherent_record() {
    let w = sine(-0.5, 100e6, 4096);
    let codes = FoldingFlashAdc::new(AdcConfig::ideal(FS).unwrap()).unwrap().convert(&w).unwrap().values_f64();
    let rect = analyze_spectrum(&codes, Window::Rectangular).unwrap();
    let hann = analyze_spectrum(&codes, Window::Hann).unwrap();
    assert_eq!(rect.signal_bin, hann.signal_bin);
    assert!((rect.sndr_db - hann.sndr_db).abs() < 1.0, "{} vs {}", rect.sndr_db, hann.sndr_db);
}
