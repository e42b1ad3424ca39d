//! Bundled pedestrian-crossing fixtures.
//!
//! Five files, expressed through the regular library machinery so the
//! on-disk form exercises cross-file references:
//!
//! * the default tag trees,
//! * the qualitative pedestrian-crossing category,
//! * the quantitative scenario (ego brakes for a crossing pedestrian, waits,
//!   accelerates away),
//! * the goal-driven test scenario (ego gets a destination instead of
//!   activities; the pedestrian starts crossing when the ego is 2.5 s away),
//! * a test-scenario variant in which the pedestrian speeds up once a
//!   collision is imminent.
//!
//! The scenario files reference the category file's actor, activity, and
//! physical-element categories by uid; the variant additionally reuses the
//! test scenario's actors and events.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::condition::ConditionExpr;
use crate::model::{
    Act, Activity, ActivityCategory, Actor, ActorCategory, ActorType, CategoryAct, ElementHeader,
    Event, PhysicalElement, PhysicalElementCategory, PropertyValue, Quantity, Scenario,
    ScenarioCategory, StateVector,
};
use crate::dynamics::ModelKind;
use crate::tags::TagRegistry;

use super::Library;

/// Uids of the bundled elements.
pub mod uids {
    pub const TAG_TREES: &str = "default tag trees";
    pub const CATEGORY: &str = "pedestrian crossing category";
    pub const QUANTITATIVE: &str = "pedestrian crossing quantitative";
    pub const TEST: &str = "pedestrian crossing test";
    pub const TEST_VARIANT: &str = "pedestrian crossing test variant";

    pub const CROSSING_CATEGORY: &str = "pedestrian crossing qualitative";
    pub const EGO_CATEGORY: &str = "ego qualitative";
    pub const PEDESTRIAN_CATEGORY: &str = "pedestrian qualitative";
    pub const BRAKING: &str = "braking";
    pub const STATIONARY: &str = "stationary";
    pub const ACCELERATING: &str = "accelerating";
    pub const WALKING: &str = "walking straight";

    pub const CROSSING_ELEMENT: &str = "pedestrian crossing";
    pub const QUANT_EGO: &str = "ego vehicle";
    pub const QUANT_PEDESTRIAN: &str = "pedestrian";
    pub const TEST_EGO: &str = "ego";
    pub const TEST_PEDESTRIAN: &str = "ped";

    pub const EVENT_START: &str = "start scenario";
    pub const EVENT_END_BRAKING: &str = "end braking";
    pub const EVENT_START_ACCELERATING: &str = "start accelerating";
    pub const EVENT_END: &str = "end scenario";
    pub const EVENT_TEST_START: &str = "start test";
    pub const EVENT_PEDESTRIAN_START: &str = "pedestrian start";
    pub const EVENT_TEST_END: &str = "end test";
    pub const EVENT_PEDESTRIAN_SPEEDUP: &str = "pedestrian speedup";
}

/// File names within the fixtures library.
pub mod files {
    pub const TAG_TREES: &str = "tag-trees.scn.json";
    pub const CATEGORY: &str = "pedestrian-crossing-category.scn.json";
    pub const QUANTITATIVE: &str = "pedestrian-crossing-quantitative.scn.json";
    pub const TEST: &str = "pedestrian-crossing-test.scn.json";
    pub const TEST_VARIANT: &str = "pedestrian-crossing-test-variant.scn.json";
}

fn condition(text: &str) -> ConditionExpr {
    ConditionExpr::parse(text).expect("fixture condition parses")
}

fn event(uid: &str, name: &str, text: &str) -> Arc<Event> {
    Arc::new(Event {
        header: ElementHeader::new(uid, name),
        condition: condition(text),
    })
}

fn params(entries: &[(&str, f64)]) -> BTreeMap<String, f64> {
    entries.iter().map(|(k, v)| ((*k).to_owned(), *v)).collect()
}

/// In-memory library holding the five fixture files. Use
/// [`Library::write_to`] to materialize them on disk.
pub fn bundled_fixtures() -> Library {
    let mut lib = Library::in_memory();

    lib.add_tag_trees_file(
        uids::TAG_TREES,
        "Default tag trees",
        TagRegistry::default_trees().trees(),
        files::TAG_TREES,
    )
    .expect("bundled tag trees are well-formed");

    lib.add_scenario_category_file(&crossing_category(), files::CATEGORY)
        .expect("bundled category is valid");

    lib.add_scenario_file(&quantitative_scenario(&lib), files::QUANTITATIVE)
        .expect("bundled quantitative scenario is valid");

    lib.add_scenario_file(&test_scenario(&lib), files::TEST)
        .expect("bundled test scenario is valid");

    lib.add_scenario_file(&test_variant_scenario(&lib), files::TEST_VARIANT)
        .expect("bundled test variant is valid");

    lib
}

/// The qualitative pedestrian-crossing category.
fn crossing_category() -> ScenarioCategory {
    let crossing = Arc::new(PhysicalElementCategory {
        header: ElementHeader::new(uids::CROSSING_CATEGORY, "Pedestrian crossing qualitative"),
        description: "A non-signalized pedestrian crossing on a two-lane urban road; the \
                      pedestrian has priority."
            .into(),
    });
    let ego = Arc::new(ActorCategory {
        header: ElementHeader::new(uids::EGO_CATEGORY, "Ego qualitative")
            .with_tags(["Ego vehicle"]),
        description: "The vehicle under assessment, driving on the right lane toward the \
                      crossing."
            .into(),
        actor_type: ActorType::Vehicle,
    });
    let pedestrian = Arc::new(ActorCategory {
        header: ElementHeader::new(uids::PEDESTRIAN_CATEGORY, "Pedestrian qualitative"),
        description: "A pedestrian walking on the footway that intersects the road.".into(),
        actor_type: ActorType::Pedestrian,
    });
    let braking = Arc::new(ActivityCategory {
        header: ElementHeader::new(uids::BRAKING, "Braking").with_tags(["Decelerating"]),
        description: "Speed decreases to a lower value along a half-cosine profile.".into(),
        state_variables: vec!["v".into()],
        model: ModelKind::sinusoidal(),
    });
    let stationary = Arc::new(ActivityCategory {
        header: ElementHeader::new(uids::STATIONARY, "Stationary").with_tags(["Standing still"]),
        description: "Speed holds at a constant value.".into(),
        state_variables: vec!["v".into()],
        model: ModelKind::constant(),
    });
    let accelerating = Arc::new(ActivityCategory {
        header: ElementHeader::new(uids::ACCELERATING, "Accelerating").with_tags(["Accelerating"]),
        description: "Speed increases at a constant rate.".into(),
        state_variables: vec!["v".into()],
        model: ModelKind::linear(),
    });
    let walking = Arc::new(ActivityCategory {
        header: ElementHeader::new(uids::WALKING, "Walking straight"),
        description: "Crossing position advances at a constant walking pace.".into(),
        state_variables: vec!["y".into()],
        model: ModelKind::linear(),
    });

    ScenarioCategory {
        header: ElementHeader::new(uids::CATEGORY, "Pedestrian crossing"),
        description: "An ego vehicle approaches a pedestrian crossing, brakes to a stop, waits \
                      while a pedestrian crosses, and accelerates away."
            .into(),
        physical_element_categories: vec![crossing],
        actor_categories: vec![Arc::clone(&ego), Arc::clone(&pedestrian)],
        activity_categories: vec![
            Arc::clone(&braking),
            Arc::clone(&stationary),
            Arc::clone(&accelerating),
            Arc::clone(&walking),
        ],
        acts: vec![
            CategoryAct { actor_category: Arc::clone(&ego), activity_category: braking },
            CategoryAct { actor_category: Arc::clone(&ego), activity_category: stationary },
            CategoryAct { actor_category: ego, activity_category: accelerating },
            CategoryAct { actor_category: pedestrian, activity_category: walking },
        ],
    }
}

/// The quantitative scenario: the ego enters at 8 m/s, 20 m before the
/// crossing center, brakes to a stop in 4 s (stopping 4 m short), waits 3 s
/// while the pedestrian crosses, then accelerates at 1.5 m/s² to 7.5 m/s.
fn quantitative_scenario(lib: &Library) -> Scenario {
    let start = event(uids::EVENT_START, "Start scenario", "t >= 0");
    let end_braking = event(uids::EVENT_END_BRAKING, "End braking", "t >= 4");
    let start_accelerating =
        event(uids::EVENT_START_ACCELERATING, "Start accelerating", "t >= 7");
    let end = event(uids::EVENT_END, "End scenario", "t >= 12");

    let crossing = Arc::new(PhysicalElement {
        header: ElementHeader::new(uids::CROSSING_ELEMENT, "Pedestrian crossing"),
        category: lib
            .physical_element_category(uids::CROSSING_CATEGORY)
            .expect("category fixture is loaded"),
        properties: [
            ("lane width".to_owned(), PropertyValue::Scalar(Quantity::with_unit(3.5, "m"))),
            ("number of lanes".to_owned(), PropertyValue::Scalar(Quantity::bare(2.0))),
            ("speed limit".to_owned(), PropertyValue::Scalar(Quantity::with_unit(50.0, "km/h"))),
            ("road surface".to_owned(), PropertyValue::Text("asphalt".into())),
        ]
        .into_iter()
        .collect(),
    });

    let ego = Arc::new(Actor {
        header: ElementHeader::new(uids::QUANT_EGO, "Ego vehicle"),
        category: lib.actor_category(uids::EGO_CATEGORY).expect("category fixture is loaded"),
        initial_state: StateVector::new([
            ("x", Quantity::with_unit(-20.0, "m")),
            ("y", Quantity::with_unit(0.0, "m")),
            ("v", Quantity::with_unit(8.0, "m/s")),
            ("a", Quantity::with_unit(0.0, "m/s^2")),
        ]),
        desired_state: None,
    });
    let pedestrian = Arc::new(Actor {
        header: ElementHeader::new(uids::QUANT_PEDESTRIAN, "Pedestrian"),
        category: lib
            .actor_category(uids::PEDESTRIAN_CATEGORY)
            .expect("category fixture is loaded"),
        initial_state: StateVector::new([
            ("x", Quantity::with_unit(0.0, "m")),
            ("y", Quantity::with_unit(-6.0, "m")),
        ]),
        desired_state: None,
    });

    let braking = Arc::new(Activity {
        header: ElementHeader::new("ego braking", "Ego braking"),
        category: lib.activity_category(uids::BRAKING).expect("category fixture is loaded"),
        parameters: params(&[("A", -8.0), ("T", 4.0), ("t0", 0.0), ("z0", 8.0)]),
        start_event: Arc::clone(&start),
        end_event: Arc::clone(&end_braking),
    });
    let stationary = Arc::new(Activity {
        header: ElementHeader::new("ego stationary", "Ego stationary"),
        category: lib.activity_category(uids::STATIONARY).expect("category fixture is loaded"),
        parameters: params(&[("z0", 0.0)]),
        start_event: Arc::clone(&end_braking),
        end_event: Arc::clone(&start_accelerating),
    });
    let accelerating = Arc::new(Activity {
        header: ElementHeader::new("ego accelerating", "Ego accelerating"),
        category: lib.activity_category(uids::ACCELERATING).expect("category fixture is loaded"),
        parameters: params(&[("s", 1.5), ("t0", 7.0), ("z0", 0.0)]),
        start_event: Arc::clone(&start_accelerating),
        end_event: Arc::clone(&end),
    });
    let walking = Arc::new(Activity {
        header: ElementHeader::new("pedestrian walking", "Pedestrian walking"),
        category: lib.activity_category(uids::WALKING).expect("category fixture is loaded"),
        parameters: params(&[("s", 1.0), ("t0", 0.0), ("z0", -6.0)]),
        start_event: Arc::clone(&start),
        end_event: Arc::clone(&end),
    });

    Scenario {
        header: ElementHeader::new(uids::QUANTITATIVE, "Pedestrian crossing"),
        start_event: start,
        end_event: end,
        physical_elements: vec![crossing],
        actors: vec![Arc::clone(&ego), Arc::clone(&pedestrian)],
        activities: vec![
            Arc::clone(&braking),
            Arc::clone(&stationary),
            Arc::clone(&accelerating),
            Arc::clone(&walking),
        ],
        events: vec![end_braking, start_accelerating],
        acts: vec![
            Act { actor: Arc::clone(&ego), activity: braking },
            Act { actor: Arc::clone(&ego), activity: stationary },
            Act { actor: ego, activity: accelerating },
            Act { actor: pedestrian, activity: walking },
        ],
    }
}

/// The test scenario: the ego starts 60 m before the crossing center with
/// the goal of reaching 20 m beyond it (80 m ahead) at 8 m/s. The pedestrian
/// waits 2.5 m short of the ego lane and starts walking when the ego is
/// 2.5 s of travel away; the scenario ends on destination, collision,
/// lateral deviation, or time limit.
fn test_scenario(lib: &Library) -> Scenario {
    let start = event(uids::EVENT_TEST_START, "Start test", "t >= 0");
    let pedestrian_start = event(
        uids::EVENT_PEDESTRIAN_START,
        "Start pedestrian",
        "x_ego / v_ego >= -2.5",
    );
    let end = event(
        uids::EVENT_TEST_END,
        "End test",
        "x_ego >= 20 || collision(ego, ped) || y_ego <= -2 || y_ego >= 1 || t > 100",
    );

    let ego = Arc::new(Actor {
        header: ElementHeader::new(uids::TEST_EGO, "Ego vehicle"),
        category: lib.actor_category(uids::EGO_CATEGORY).expect("category fixture is loaded"),
        initial_state: StateVector::new([
            ("x", Quantity::with_unit(-60.0, "m")),
            ("y", Quantity::with_unit(0.0, "m")),
            ("v", Quantity::with_unit(8.0, "m/s")),
        ]),
        desired_state: Some(StateVector::new([
            ("x", Quantity::with_unit(20.0, "m")),
            ("v", Quantity::with_unit(8.0, "m/s")),
        ])),
    });
    let pedestrian = Arc::new(Actor {
        header: ElementHeader::new(uids::TEST_PEDESTRIAN, "Pedestrian"),
        category: lib
            .actor_category(uids::PEDESTRIAN_CATEGORY)
            .expect("category fixture is loaded"),
        initial_state: StateVector::new([
            ("x", Quantity::with_unit(0.0, "m")),
            ("y", Quantity::with_unit(-2.5, "m")),
        ]),
        desired_state: None,
    });

    let walking = Arc::new(Activity {
        header: ElementHeader::new("pedestrian walking test", "Pedestrian walking"),
        category: lib.activity_category(uids::WALKING).expect("category fixture is loaded"),
        parameters: params(&[("s", 1.0), ("t0", 5.0), ("z0", -2.5)]),
        start_event: Arc::clone(&pedestrian_start),
        end_event: Arc::clone(&end),
    });

    Scenario {
        header: ElementHeader::new(uids::TEST, "Pedestrian crossing test"),
        start_event: start,
        end_event: end,
        physical_elements: vec![lib
            .cached_physical_element(uids::CROSSING_ELEMENT)
            .expect("quantitative fixture is loaded")],
        actors: vec![Arc::clone(&ego), Arc::clone(&pedestrian)],
        activities: vec![Arc::clone(&walking)],
        events: vec![pedestrian_start],
        acts: vec![Act { actor: pedestrian, activity: walking }],
    }
}

/// Variant of the test scenario: when a collision is about to happen (the
/// ego is within one second of travel and the pedestrian has not yet cleared
/// the lane), the walking activity ends and a faster 2 m/s crossing activity
/// starts at the same event.
fn test_variant_scenario(lib: &Library) -> Scenario {
    let start = lib.event(uids::EVENT_TEST_START).expect("test fixture is loaded");
    let pedestrian_start =
        lib.event(uids::EVENT_PEDESTRIAN_START).expect("test fixture is loaded");
    let end = lib.event(uids::EVENT_TEST_END).expect("test fixture is loaded");
    let speedup = event(
        uids::EVENT_PEDESTRIAN_SPEEDUP,
        "Pedestrian speedup",
        "abs(x_ego / v_ego) <= 1 && y_ped < 0",
    );

    let ego = lib.actor(uids::TEST_EGO).expect("test fixture is loaded");
    let pedestrian = lib.actor(uids::TEST_PEDESTRIAN).expect("test fixture is loaded");

    let walking = Arc::new(Activity {
        header: ElementHeader::new("pedestrian walking variant", "Pedestrian walking"),
        category: lib.activity_category(uids::WALKING).expect("category fixture is loaded"),
        parameters: params(&[("s", 1.0), ("t0", 5.0), ("z0", -2.5)]),
        start_event: Arc::clone(&pedestrian_start),
        end_event: Arc::clone(&speedup),
    });
    let hurrying = Arc::new(Activity {
        header: ElementHeader::new("pedestrian speedup walking", "Pedestrian hurrying"),
        category: lib.activity_category(uids::WALKING).expect("category fixture is loaded"),
        parameters: params(&[("s", 2.0), ("t0", 6.5), ("z0", -1.0)]),
        start_event: Arc::clone(&speedup),
        end_event: Arc::clone(&end),
    });

    Scenario {
        header: ElementHeader::new(uids::TEST_VARIANT, "Pedestrian crossing test (speedup variant)"),
        start_event: start,
        end_event: end,
        physical_elements: vec![lib
            .cached_physical_element(uids::CROSSING_ELEMENT)
            .expect("quantitative fixture is loaded")],
        actors: vec![Arc::clone(&ego), Arc::clone(&pedestrian)],
        activities: vec![Arc::clone(&walking), Arc::clone(&hurrying)],
        events: vec![pedestrian_start, speedup],
        acts: vec![
            Act { actor: Arc::clone(&pedestrian), activity: walking },
            Act { actor: pedestrian, activity: hurrying },
        ],
    }
}

/// The test-scenario category: identical to the full category except that it
/// carries no ego activity categories (the ego is goal-driven). Built from
/// the loaded fixture categories so the shared objects are reused.
pub fn test_scenario_category(lib: &Library) -> ScenarioCategory {
    let pedestrian = lib
        .actor_category(uids::PEDESTRIAN_CATEGORY)
        .expect("category fixture is loaded");
    let walking = lib.activity_category(uids::WALKING).expect("category fixture is loaded");
    ScenarioCategory {
        header: ElementHeader::new(
            "pedestrian crossing test category",
            "Pedestrian crossing test",
        ),
        description: "An ego vehicle with a driving goal approaches a pedestrian crossing while \
                      a pedestrian crosses."
            .into(),
        physical_element_categories: vec![lib
            .physical_element_category(uids::CROSSING_CATEGORY)
            .expect("category fixture is loaded")],
        actor_categories: vec![
            lib.actor_category(uids::EGO_CATEGORY).expect("category fixture is loaded"),
            Arc::clone(&pedestrian),
        ],
        activity_categories: vec![Arc::clone(&walking)],
        acts: vec![CategoryAct { actor_category: pedestrian, activity_category: walking }],
    }
}
