use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::geometry::{Pose, Vec3};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Cup,
    Mug,
    Bowl,
    Plate,
    Pot,
    Pan,
    Kettle,
    Bottle,
    Jar,
    Lunchbox,
    Apple,
    Book,
    Box,
    Basket,
    Drawer,
    Cabinet,
    Fridge,
    Microwave,
    Sink,
    Table,
    Counter,
    Shelf,
    Sofa,
    Bed,
    Chair,
}

impl Category {
    pub const ALL: [Category; 25] = [
        Category::Cup,
        Category::Mug,
        Category::Bowl,
        Category::Plate,
        Category::Pot,
        Category::Pan,
        Category::Kettle,
        Category::Bottle,
        Category::Jar,
        Category::Lunchbox,
        Category::Apple,
        Category::Book,
        Category::Box,
        Category::Basket,
        Category::Drawer,
        Category::Cabinet,
        Category::Fridge,
        Category::Microwave,
        Category::Sink,
        Category::Table,
        Category::Counter,
        Category::Shelf,
        Category::Sofa,
        Category::Bed,
        Category::Chair,
    ];

    /// Token id in observation grids (`10 + position in ALL`).
    pub fn token(self) -> u16 {
        10 + Category::ALL.iter().position(|&c| c == self).unwrap() as u16
    }

    pub fn name(self) -> &'static str {
        match self {
            Category::Cup => "cup",
            Category::Mug => "mug",
            Category::Bowl => "bowl",
            Category::Plate => "plate",
            Category::Pot => "pot",
            Category::Pan => "pan",
            Category::Kettle => "kettle",
            Category::Bottle => "bottle",
            Category::Jar => "jar",
            Category::Lunchbox => "lunchbox",
            Category::Apple => "apple",
            Category::Book => "book",
            Category::Box => "box",
            Category::Basket => "basket",
            Category::Drawer => "drawer",
            Category::Cabinet => "cabinet",
            Category::Fridge => "fridge",
            Category::Microwave => "microwave",
            Category::Sink => "sink",
            Category::Table => "table",
            Category::Counter => "counter",
            Category::Shelf => "shelf",
            Category::Sofa => "sofa",
            Category::Bed => "bed",
            Category::Chair => "chair",
        }
    }

    pub fn parse(s: &str) -> Option<Category> {
        Category::ALL.iter().copied().find(|c| c.name() == s)
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Static affordances.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Property {
    Pickupable,
    Pourable,
    Breakable,
    Openable,
    Receptacle,
    Heavy,
    /// Must be steadied by one hand while the other opens it.
    HoldToOpen,
}

/// Mutable condition flags.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateFlag {
    Open,
    Closed,
    Broken,
    Spilled,
    Filled,
}

pub type PropertySet = BTreeSet<Property>;
pub type StateSet = BTreeSet<StateFlag>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    pub id: String,
    pub category: Category,
    pub pose: Pose,
    pub mass: f64,
    pub grasp_width: f64,
    /// Grasp point relative to `pose.position`, in world axes.
    pub grasp_offset: [f64; 3],
    pub properties: PropertySet,
    pub state: StateSet,
    pub parent: Option<String>,
}

impl SceneObject {
    pub fn has(&self, p: Property) -> bool {
        self.properties.contains(&p)
    }

    pub fn is(&self, f: StateFlag) -> bool {
        self.state.contains(&f)
    }

    pub fn set(&mut self, f: StateFlag, on: bool) {
        if on {
            self.state.insert(f);
        } else {
            self.state.remove(&f);
        }
    }

    pub fn grasp_point(&self) -> Vec3 {
        self.pose.translation() + Vec3::from(self.grasp_offset)
    }

    pub fn mark_broken(&mut self) {
        self.set(StateFlag::Broken, true);
        self.properties.remove(&Property::Pickupable);
    }
}
