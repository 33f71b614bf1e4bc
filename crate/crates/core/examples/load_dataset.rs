//! Reading a CSV with a header, dropping an id column, min-max scaling and
//! the stratified test / train / validation split.
//!
//!     cargo run --example load_dataset [path.csv]

use cellevo::data::{parse_csv, split_indices, Builtin, Column, CsvSchema, SplitSpec};

const INLINE: &str = "id,length,width,kind
1,4.9,3.0,setosa
2,7.0,3.2,versicolor
3,?,3.1,setosa
4,6.4,3.2,versicolor
5,5.0,3.6,setosa
6,5.9,3.0,versicolor
7,5.4,3.9,setosa
8,6.9,3.1,versicolor
";

fn main() -> cellevo::Result<()> {
    let schema = CsvSchema {
        has_header: true,
        ..CsvSchema::label_last()
    }
    .ignoring(Column::parse("id"))
    .with_label(Column::parse("kind"));
    let data = match std::env::args().nth(1) {
        Some(p) => cellevo::data::load_csv(p, &schema)?,
        None => parse_csv("inline", INLINE, &schema)?,
    };
    println!(
        "{}: {} patterns, {} attributes, classes {:?}, {} rows dropped for missing values",
        data.name(),
        data.len(),
        data.num_attributes(),
        data.class_labels(),
        data.dropped_rows()
    );

    for b in Builtin::ALL {
        let d = b.load();
        let idx = split_indices(&d, &SplitSpec::new(1))?;
        println!(
            "{:<9} {} patterns -> test {}, train {}, validation {}; class counts {:?}",
            b.name(),
            d.len(),
            idx.test.len(),
            idx.train.len(),
            idx.validation.len(),
            d.class_counts()
        );
    }
    Ok(())
}
