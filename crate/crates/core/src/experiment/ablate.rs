use super::run::{collect_training, insert_scheme, test_designs, train_model, write_csv};
use super::{feature_group, ExperimentSpec, Scheme};
use crate::error::{Error, Result, StageExt};
use crate::place::hpwl;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AblationAxis {
    Beta,
    Gamma,
    Layers,
    Features,
    Lr,
}

impl AblationAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            AblationAxis::Beta => "beta",
            AblationAxis::Gamma => "gamma",
            AblationAxis::Layers => "layers",
            AblationAxis::Features => "features",
            AblationAxis::Lr => "lr",
        }
    }
}

impl std::str::FromStr for AblationAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "beta" => AblationAxis::Beta,
            "gamma" => AblationAxis::Gamma,
            "layers" => AblationAxis::Layers,
            "features" => AblationAxis::Features,
            "lr" => AblationAxis::Lr,
            _ => return Err(Error::InvalidArgument(format!("unknown ablation axis `{s}`"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationRow {
    pub axis: AblationAxis,
    pub value: String,
    /// Means over designs where insertion succeeded.
    pub mean_pwlr: Option<f64>,
    pub mean_wer: Option<f64>,
    pub mean_attempts: Option<f64>,
    pub failures: usize,
    pub designs: usize,
    pub final_loss: Option<f64>,
}

/// Applies one axis value to a copy of `spec`. Feature values name the
/// groups to zero, joined by `+`, or `none`.
fn with_value(spec: &ExperimentSpec, axis: AblationAxis, value: &str) -> Result<ExperimentSpec> {
    let num = || -> Result<f64> {
        value.parse::<f64>().map_err(|_| Error::InvalidArgument(format!("{}: `{value}` is not a number", axis.as_str())))
    };
    let mut s = spec.clone();
    match axis {
        AblationAxis::Beta => s.watermark.beta = num()?,
        AblationAxis::Gamma => s.watermark.gamma = num()?,
        AblationAxis::Lr => s.model.train.learning_rate = num()?,
        AblationAxis::Layers => {
            s.model.depth = value.parse().map_err(|_| Error::InvalidArgument(format!("layers: `{value}` is not a count")))?;
        }
        AblationAxis::Features => {
            s.model.zero_features = if value == "none" { vec![] } else { value.split('+').map(str::to_string).collect() };
            for g in &s.model.zero_features {
                feature_group(g)?;
            }
        }
    }
    s.validate()?;
    Ok(s)
}

/// Reruns the gnn-region pipeline once per value of `axis`, retraining the
/// model unless only gamma changes. Training labels are collected once and
/// re-transformed per beta. Writes `ablation-<axis>.csv` to the output directory.
pub fn cmd_ablate(spec: &ExperimentSpec, axis: AblationAxis, values: &[String]) -> Result<Vec<AblationRow>> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("no ablation values".into()));
    }
    let specs: Vec<ExperimentSpec> = values.iter().map(|v| with_value(spec, axis, v)).collect::<Result<_>>().stage("spec")?;
    std::fs::create_dir_all(&spec.output).map_err(|e| Error::io(&spec.output, e)).stage("output")?;
    let designs = test_designs(spec).stage("placement")?;
    let data = collect_training(spec).stage("labels")?;
    let mut cached: Option<(crate::gnn::GcnModel, Option<f64>)> = None;
    let mut rows = Vec::new();
    for (value, s) in values.iter().zip(&specs) {
        if cached.is_none() || axis != AblationAxis::Gamma {
            let (m, losses) = train_model(s, &data).stage("train")?;
            cached = Some((m, losses.last().copied()));
        }
        let (model, final_loss) = cached.as_ref().map(|(m, l)| (m, *l)).unwrap();
        let (mut pw, mut we, mut at) = (Vec::new(), Vec::new(), Vec::new());
        let mut failures = 0;
        for d in &designs {
            match insert_scheme(s, d, Scheme::GnnRegion, Some(model)) {
                Ok(ins) => {
                    pw.push(hpwl(&d.netlist, &ins.placement)? / hpwl(&d.netlist, &d.baseline)?);
                    we.push(ins.extract(&d.netlist, &ins.placement)?);
                    at.push(ins.attempts as f64);
                }
                Err(_) => failures += 1,
            }
        }
        let mean = |v: &[f64]| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
        rows.push(AblationRow {
            axis,
            value: value.clone(),
            mean_pwlr: mean(&pw),
            mean_wer: mean(&we),
            mean_attempts: mean(&at),
            failures,
            designs: designs.len(),
            final_loss,
        });
    }
    let f = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
    let records: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.axis.as_str().into(),
                r.value.clone(),
                f(r.mean_pwlr),
                f(r.mean_wer),
                f(r.mean_attempts),
                r.failures.to_string(),
                r.designs.to_string(),
                f(r.final_loss),
            ]
        })
        .collect();
    let header = ["axis", "value", "mean_pwlr", "mean_wer", "mean_attempts", "failures", "designs", "final_loss"];
    write_csv(&spec.output.join(format!("ablation-{}.csv", axis.as_str())), &header, &records).stage("output")?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_are_checked_before_running() {
        let spec = ExperimentSpec::default();
        assert!(with_value(&spec, AblationAxis::Beta, "abc").is_err());
        assert!(with_value(&spec, AblationAxis::Layers, "0").is_err());
        assert!(with_value(&spec, AblationAxis::Features, "colour").is_err());
        let s = with_value(&spec, AblationAxis::Features, "cell-name").unwrap();
        assert_eq!(s.zeroed_columns().unwrap(), vec![4, 5, 6, 7]);
        let s = with_value(&spec, AblationAxis::Layers, "5").unwrap();
        assert_eq!(s.model.depth, 5);
        assert!("depth".parse::<AblationAxis>().is_err());
    }
}
