use super::args::EvalArgs;
use super::job::{check_positive, evaluate, load_dataset};
use super::{to_json_pretty, CliResult};
use crate::data::{CsvSchema, Domain, Task};
use crate::error::Error;
use crate::learners::{ModelTask, Predictor};

/// Print the metrics of a saved model on a labeled dataset as JSON.
pub fn run(args: &EvalArgs) -> CliResult<()> {
    if let Some(r) = args.within {
        check_positive("--within", r)?;
    }
    let text = std::fs::read_to_string(&args.model)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", args.model.display()))))?;
    let model = Predictor::from_json(&text)?;
    let task = match model.task {
        ModelTask::Regression => Task::Regression,
        ModelTask::ClassificationOva => Task::Classification,
    };
    let mut schema = CsvSchema::new(task);
    schema.label_columns = args.label_columns.clone();
    schema.feature_columns = args.feature_columns.clone();
    if task == Task::Classification {
        schema.n_classes = Some(model.output_dim());
    }
    let ds = load_dataset(&args.data, &schema, Domain::Target)?;
    let metrics = evaluate(&model, &ds, args.within)?.ok_or_else(|| Error::Schema("dataset has no labels".into()))?;
    print!("{}", to_json_pretty(&metrics)?);
    Ok(())
}
