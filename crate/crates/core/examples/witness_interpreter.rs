//! Ask the witness of a fixture task some questions, then run free-text
//! answers through the interpreter.

use camsearch::fixture::factory_small_taskset;
use camsearch::witness::{fill_template, parse_witness_response, templates, Witness, WitnessConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let set = factory_small_taskset();
    let task = set.tasks.iter().find(|t| t.track == 2).ok_or("no track 2 task")?;
    let target = set.person(task.target).ok_or("target missing")?;
    let mut w = Witness::new(task, target, WitnessConfig::default());

    println!("{} (target {})", task.id, task.target);
    for attr in ["shoe_type", "upper_garment_color", "torso_bag_type", "hair_color", "no_such_attribute"] {
        match w.respond_attribute(&set.schema, attr) {
            Ok((text, rule)) => {
                let parsed = parse_witness_response(&text, attr, &set.schema);
                println!("  {attr:<20} {rule:?}: {text:?} -> {parsed:?}");
            }
            Err(e) => println!("  {attr:<20} error: {e}"),
        }
    }
    let first = w.respond_spatial()?;
    let again = w.respond_spatial()?;
    println!("  where: {:?}", first.text);
    println!("  where, again: {:?} (informative {})", again.text, again.informative);

    println!("\ntemplates");
    for t in templates() {
        println!("  {}", fill_template(t, "Navy"));
    }
    for text in ["Maybe navy, or black?", "It was a bright green one", "no idea what colour"] {
        println!("{text:?} -> {:?}", parse_witness_response(text, "upper_garment_color", &set.schema));
    }
    Ok(())
}
