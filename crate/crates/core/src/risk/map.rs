//! The fixed 42-territory board.

use std::sync::OnceLock;

pub const CONTINENTS: [(&str, u32, &[&str]); 6] = [
    (
        "North_America",
        5,
        &[
            "Alaska",
            "Northwest_Territory",
            "Greenland",
            "Alberta",
            "Ontario",
            "Quebec",
            "Western_United_States",
            "Eastern_United_States",
            "Central_America",
        ],
    ),
    ("South_America", 2, &["Venezuela", "Peru", "Brazil", "Argentina"]),
    (
        "Europe",
        5,
        &[
            "Iceland",
            "Scandinavia",
            "Ukraine",
            "Great_Britain",
            "Northern_Europe",
            "Western_Europe",
            "Southern_Europe",
        ],
    ),
    (
        "Africa",
        3,
        &[
            "North_Africa",
            "Egypt",
            "East_Africa",
            "Congo",
            "South_Africa",
            "Madagascar",
        ],
    ),
    (
        "Asia",
        7,
        &[
            "Ural",
            "Siberia",
            "Yakutsk",
            "Kamchatka",
            "Irkutsk",
            "Mongolia",
            "Japan",
            "Afghanistan",
            "China",
            "Middle_East",
            "India",
            "Siam",
        ],
    ),
    (
        "Australia",
        2,
        &["Indonesia", "New_Guinea", "Western_Australia", "Eastern_Australia"],
    ),
];

pub const EDGES: [(&str, &str); 83] = [
    ("Alaska", "Northwest_Territory"),
    ("Alaska", "Alberta"),
    ("Alaska", "Kamchatka"),
    ("Northwest_Territory", "Alberta"),
    ("Northwest_Territory", "Ontario"),
    ("Northwest_Territory", "Greenland"),
    ("Greenland", "Ontario"),
    ("Greenland", "Quebec"),
    ("Greenland", "Iceland"),
    ("Alberta", "Ontario"),
    ("Alberta", "Western_United_States"),
    ("Ontario", "Quebec"),
    ("Ontario", "Western_United_States"),
    ("Ontario", "Eastern_United_States"),
    ("Quebec", "Eastern_United_States"),
    ("Western_United_States", "Eastern_United_States"),
    ("Western_United_States", "Central_America"),
    ("Eastern_United_States", "Central_America"),
    ("Central_America", "Venezuela"),
    ("Venezuela", "Peru"),
    ("Venezuela", "Brazil"),
    ("Peru", "Brazil"),
    ("Peru", "Argentina"),
    ("Brazil", "Argentina"),
    ("Brazil", "North_Africa"),
    ("Iceland", "Great_Britain"),
    ("Iceland", "Scandinavia"),
    ("Scandinavia", "Great_Britain"),
    ("Scandinavia", "Northern_Europe"),
    ("Scandinavia", "Ukraine"),
    ("Great_Britain", "Northern_Europe"),
    ("Great_Britain", "Western_Europe"),
    ("Northern_Europe", "Western_Europe"),
    ("Northern_Europe", "Southern_Europe"),
    ("Northern_Europe", "Ukraine"),
    ("Western_Europe", "Southern_Europe"),
    ("Western_Europe", "North_Africa"),
    ("Southern_Europe", "Ukraine"),
    ("Southern_Europe", "North_Africa"),
    ("Southern_Europe", "Egypt"),
    ("Southern_Europe", "Middle_East"),
    ("Ukraine", "Ural"),
    ("Ukraine", "Afghanistan"),
    ("Ukraine", "Middle_East"),
    ("North_Africa", "Egypt"),
    ("North_Africa", "East_Africa"),
    ("North_Africa", "Congo"),
    ("Egypt", "East_Africa"),
    ("Egypt", "Middle_East"),
    ("East_Africa", "Congo"),
    ("East_Africa", "South_Africa"),
    ("East_Africa", "Madagascar"),
    ("East_Africa", "Middle_East"),
    ("Congo", "South_Africa"),
    ("South_Africa", "Madagascar"),
    ("Ural", "Siberia"),
    ("Ural", "China"),
    ("Ural", "Afghanistan"),
    ("Siberia", "Yakutsk"),
    ("Siberia", "Irkutsk"),
    ("Siberia", "Mongolia"),
    ("Siberia", "China"),
    ("Yakutsk", "Kamchatka"),
    ("Yakutsk", "Irkutsk"),
    ("Kamchatka", "Irkutsk"),
    ("Kamchatka", "Mongolia"),
    ("Kamchatka", "Japan"),
    ("Irkutsk", "Mongolia"),
    ("Mongolia", "China"),
    ("Mongolia", "Japan"),
    ("Afghanistan", "China"),
    ("Afghanistan", "India"),
    ("Afghanistan", "Middle_East"),
    ("China", "India"),
    ("China", "Siam"),
    ("India", "Middle_East"),
    ("India", "Siam"),
    ("Siam", "Indonesia"),
    ("Indonesia", "New_Guinea"),
    ("Indonesia", "Western_Australia"),
    ("New_Guinea", "Western_Australia"),
    ("New_Guinea", "Eastern_Australia"),
    ("Western_Australia", "Eastern_Australia"),
];

pub const TERRITORY_COUNT: usize = 42;

#[derive(Debug)]
pub struct Board {
    pub names: Vec<&'static str>,
    /// Continent index per territory.
    pub continent: Vec<usize>,
    /// Sorted neighbor indices per territory.
    pub adjacent: Vec<Vec<usize>>,
}

impl Board {
    pub fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| *n == name)
    }

    pub fn are_adjacent(&self, a: usize, b: usize) -> bool {
        self.adjacent[a].binary_search(&b).is_ok()
    }

    /// Territory indices of continent `c`.
    pub fn members(&self, c: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.names.len()).filter(move |&t| self.continent[t] == c)
    }

    pub fn continent_name(&self, c: usize) -> &'static str {
        CONTINENTS[c].0
    }

    pub fn bonus(&self, c: usize) -> u32 {
        CONTINENTS[c].1
    }
}

pub fn board() -> &'static Board {
    static BOARD: OnceLock<Board> = OnceLock::new();
    BOARD.get_or_init(|| {
        let mut names = Vec::new();
        let mut continent = Vec::new();
        for (c, (_, _, ts)) in CONTINENTS.iter().enumerate() {
            for t in ts.iter() {
                names.push(*t);
                continent.push(c);
            }
        }
        let mut adjacent = vec![Vec::new(); names.len()];
        let idx = |n: &str| names.iter().position(|x| *x == n).expect("edge names a territory");
        for (a, b) in EDGES {
            let (a, b) = (idx(a), idx(b));
            adjacent[a].push(b);
            adjacent[b].push(a);
        }
        for list in &mut adjacent {
            list.sort_unstable();
        }
        Board {
            names,
            continent,
            adjacent,
        }
    })
}
