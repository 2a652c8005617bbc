use scop_core::copula::Family;
use scop_core::signal::{dft_epoch, index_to_hz};
use scop_core::simstudy::{gen_ar2, run_sim1, run_sim2, Sim1Config, Sim2Config, Stats};

fn averaged_periodogram_peak_hz(phi: (f64, f64), fs: f64, t: usize) -> f64 {
    let spec = scop_core::simstudy::Ar2Spec::new(phi.0, phi.1, 1.0, "z").unwrap();
    let epochs = gen_ar2(&spec, 100, t, 31).unwrap();
    let mut power = vec![0.0; t / 2 + 1];
    for e in &epochs {
        for (p, c) in power.iter_mut().zip(dft_epoch(e).unwrap()) {
            *p += c.norm_sqr();
        }
    }
    let k = (1..power.len())
        .max_by(|a, b| power[*a].total_cmp(&power[*b]))
        .unwrap();
    index_to_hz(k, t, fs)
}

#[test]
fn latent_periodogram_peaks_at_twelve_hz() {
    let latent = Sim1Config::default().latent;
    let hz = averaged_periodogram_peak_hz((latent.phi1, latent.phi2), 1500.0, 1500);
    assert!((hz - 12.0).abs() <= 1.0, "{hz}");
    // the rounded coefficients put the peak several bins lower
    let hz = averaged_periodogram_peak_hz((1.989, -0.990), 1500.0, 1500);
    assert!((6.0..=9.0).contains(&hz), "{hz}");
}

#[test]
fn overwhelming_noise_removes_both_measures() {
    let cfg = Sim1Config {
        replicates: 10,
        epochs: 200,
        sigma_eps: 1000.0,
        ..Sim1Config::default()
    };
    let report = run_sim1(&cfg).unwrap();
    assert!(report.tau_raw.as_ref().unwrap().mean.abs() < 0.02);
    assert!(report.frequencies[0].rank_coherence.mean.abs() < 0.05);
}

#[test]
fn innovation_scale_leaves_rank_coherence_unchanged() {
    let base = Sim1Config {
        replicates: 4,
        epochs: 100,
        ..Sim1Config::default()
    };
    let mut doubled = base.clone();
    doubled.latent.innovation_sd *= 2.0;
    let a = run_sim1(&base).unwrap();
    let b = run_sim1(&doubled).unwrap();
    for (x, y) in a.replicates.iter().zip(&b.replicates) {
        assert_eq!(x.frequencies[0].rank_coherence, y.frequencies[0].rank_coherence);
        assert_eq!(x.tau_raw, y.tau_raw);
    }
}

#[test]
fn noise_only_scenario_prefers_independence() {
    let cfg = Sim2Config {
        replicates: 30,
        noise_only: true,
        ..Sim2Config::default()
    };
    let report = run_sim2(&cfg).unwrap();
    for f in &report.frequencies {
        assert_eq!(f.modal_family, Some(Family::Independent), "{} Hz", f.frequency_hz);
        assert!(f.rank_coherence.mean.abs() < 0.02);
    }
}

#[test]
fn summaries_recompute_from_records() {
    let cfg = Sim2Config {
        replicates: 6,
        epochs: 200,
        ..Sim2Config::default()
    };
    let report = run_sim2(&cfg).unwrap();
    assert_eq!(report.replicate_count, 6);
    for (j, f) in report.frequencies.iter().enumerate() {
        let ks: Vec<f64> = report
            .replicates
            .iter()
            .map(|r| r.frequencies[j].rank_coherence)
            .collect();
        assert_eq!(Stats::from_values(&ks), f.rank_coherence);
        let total: usize = f.selection_counts.iter().map(|(_, c)| c).sum();
        assert_eq!(total, 6);
    }
    let tables = [report.table1_csv(), report.table2_csv(), report.table3_csv()];
    assert!(tables.iter().all(|t| t.is_ok()));
    let t3 = String::from_utf8(report.table3_csv().unwrap()).unwrap();
    assert!(t3.starts_with("frequency_hz,independent,gaussian,student_t,clayton,gumbel,frank,joe\n"));
    assert_eq!(report.scatter.len(), 2);
    assert_eq!(report.scatter[0].u.len(), 200);
}
