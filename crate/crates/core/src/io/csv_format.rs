//! CSV variant with header `label,group,f0,f1,...`. The group column is
//! empty for ungrouped datasets.

use std::path::Path;

use crate::data::LabeledEmbeddings;
use crate::error::{contract, Result};

pub fn write_embeddings_csv(data: &LabeledEmbeddings, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["label".to_string(), "group".to_string()];
    header.extend((0..data.dim()).map(|j| format!("f{j}")));
    w.write_record(&header)?;
    for (i, row) in data.rows().enumerate() {
        let mut rec = vec![
            data.labels()[i].to_string(),
            data.group_ids().map_or(String::new(), |g| g[i].to_string()),
        ];
        rec.extend(row.iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a CSV dataset. `num_classes` defaults to `max label + 1`.
pub fn read_embeddings_csv(
    path: impl AsRef<Path>,
    num_classes: Option<usize>,
) -> Result<LabeledEmbeddings> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.clone();
    if header.len() < 3 || &header[0] != "label" || &header[1] != "group" {
        return Err(contract("CSV header must start with label,group,f0"));
    }
    let d = header.len() - 2;
    let (mut features, mut labels, mut groups) = (Vec::new(), Vec::new(), Vec::new());
    let mut any_group = false;
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let bad = |what: &str| contract(format!("row {}: bad {what}", line + 1));
        labels.push(rec[0].trim().parse::<usize>().map_err(|_| bad("label"))?);
        let g = rec[1].trim();
        if g.is_empty() {
            groups.push(None);
        } else {
            any_group = true;
            groups.push(Some(g.parse::<u32>().map_err(|_| bad("group"))?));
        }
        for j in 0..d {
            features.push(rec[j + 2].trim().parse::<f64>().map_err(|_| bad("feature"))?);
        }
    }
    let group_ids = if any_group {
        Some(
            groups
                .into_iter()
                .collect::<Option<Vec<u32>>>()
                .ok_or_else(|| contract("group column must be all empty or all filled"))?,
        )
    } else {
        None
    };
    let k = num_classes.unwrap_or_else(|| labels.iter().max().map_or(0, |m| m + 1).max(2));
    LabeledEmbeddings::new(features, d, labels, k, group_ids)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        let d = LabeledEmbeddings::new(vec![0.1, -2.0, 3.5, 1e-7], 2, vec![1, 0], 3, Some(vec![4, 5])).unwrap();
        write_embeddings_csv(&d, &p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("label,group,f0,f1\n"));
        assert_eq!(read_embeddings_csv(&p, Some(3)).unwrap(), d);

        let plain = LabeledEmbeddings::from_rows(&[vec![1.0]], vec![1], 2).unwrap();
        write_embeddings_csv(&plain, &p).unwrap();
        assert_eq!(read_embeddings_csv(&p, None).unwrap(), plain);
    }
}
