//! Statistics for the manual coding step: a chi-square test on topic
//! proportions, Krippendorff's alpha for coder agreement and a stratified
//! sample of tweets to code.

use sentinel_core::stats::{
    chi_square, krippendorff_alpha, stratified_sample, CodingMatrix, ContingencyTable, SampleCandidate,
};

fn main() -> sentinel_core::Result<()> {
    // share of sampled tweets judged misleading, per cluster
    let table = ContingencyTable::from_proportions(&[("Left", 52, 361), ("Right", 325, 382), ("FarRight", 360, 408)])?;
    let all = chi_square(&table)?;
    println!("all clusters:       chi2 {:.2}, df {}, p {:.2e}", all.statistic, all.df, all.p_value);
    let right = ContingencyTable::from_proportions(&[("Right", 325, 382), ("FarRight", 360, 408)])?;
    let pair = chi_square(&right)?;
    println!("Right vs FarRight:  chi2 {:.2}, df {}, p {:.3}", pair.statistic, pair.df, pair.p_value);

    // three coders, one missing judgement each
    let coding = CodingMatrix::read_csv(
        "coder,t1,t2,t3,t4,t5,t6,t7,t8\n\
         A,1,0,1,1,0,,1,0\n\
         B,1,0,1,0,0,1,,0\n\
         C,,0,1,1,0,1,1,1\n"
            .as_bytes(),
    )?;
    println!("krippendorff alpha: {:.3}", krippendorff_alpha(&coding)?);

    let candidates: Vec<SampleCandidate> = (0..60)
        .map(|i| SampleCandidate {
            tweet_id: format!("{i:04}"),
            cluster: i % 3,
            community: (i % 6) as u32,
            topic: if i % 4 == 0 { "vaccine".into() } else { "covid".into() },
        })
        .collect();
    let sample = stratified_sample(&candidates, 4, 11);
    println!("\nstratified sample ({} tweets):", sample.len());
    for s in &sample {
        println!("  {} cluster {} community {} {}", s.tweet_id, s.cluster, s.community, s.topic);
    }
    Ok(())
}
