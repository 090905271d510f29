/// A decimal (SI) unit prefix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitPrefix {
    pub name: &'static str,
    pub symbol: &'static str,
    pub magnitude: f64,
}

impl UnitPrefix {
    /// The identity prefix. Applying it to a unit yields the unit itself.
    pub const NONE: UnitPrefix = UnitPrefix::new("", "", 1.0);

    pub const YOCTO: UnitPrefix = UnitPrefix::new("yocto", "y", 1e-24);
    pub const ZEPTO: UnitPrefix = UnitPrefix::new("zepto", "z", 1e-21);
    pub const ATTO: UnitPrefix = UnitPrefix::new("atto", "a", 1e-18);
    pub const FEMTO: UnitPrefix = UnitPrefix::new("femto", "f", 1e-15);
    pub const PICO: UnitPrefix = UnitPrefix::new("pico", "p", 1e-12);
    pub const NANO: UnitPrefix = UnitPrefix::new("nano", "n", 1e-9);
    pub const MICRO: UnitPrefix = UnitPrefix::new("micro", "u", 1e-6);
    pub const MILLI: UnitPrefix = UnitPrefix::new("milli", "m", 1e-3);
    pub const CENTI: UnitPrefix = UnitPrefix::new("centi", "c", 1e-2);
    pub const DECI: UnitPrefix = UnitPrefix::new("deci", "d", 1e-1);
    pub const DECA: UnitPrefix = UnitPrefix::new("deca", "da", 1e1);
    pub const HECTO: UnitPrefix = UnitPrefix::new("hecto", "h", 1e2);
    pub const KILO: UnitPrefix = UnitPrefix::new("kilo", "k", 1e3);
    pub const MEGA: UnitPrefix = UnitPrefix::new("mega", "M", 1e6);
    pub const GIGA: UnitPrefix = UnitPrefix::new("giga", "G", 1e9);
    pub const TERA: UnitPrefix = UnitPrefix::new("tera", "T", 1e12);
    pub const PETA: UnitPrefix = UnitPrefix::new("peta", "P", 1e15);
    pub const EXA: UnitPrefix = UnitPrefix::new("exa", "E", 1e18);
    pub const ZETTA: UnitPrefix = UnitPrefix::new("zetta", "Z", 1e21);
    pub const YOTTA: UnitPrefix = UnitPrefix::new("yotta", "Y", 1e24);

    pub const fn new(name: &'static str, symbol: &'static str, magnitude: f64) -> Self {
        Self {
            name,
            symbol,
            magnitude,
        }
    }

    /// All SI decimal prefixes, yocto through yotta.
    pub fn decimal() -> &'static [UnitPrefix] {
        &DECIMAL
    }

    pub fn is_identity(&self) -> bool {
        self.magnitude == 1.0
    }
}

static DECIMAL: [UnitPrefix; 20] = [
    UnitPrefix::YOCTO,
    UnitPrefix::ZEPTO,
    UnitPrefix::ATTO,
    UnitPrefix::FEMTO,
    UnitPrefix::PICO,
    UnitPrefix::NANO,
    UnitPrefix::MICRO,
    UnitPrefix::MILLI,
    UnitPrefix::CENTI,
    UnitPrefix::DECI,
    UnitPrefix::DECA,
    UnitPrefix::HECTO,
    UnitPrefix::KILO,
    UnitPrefix::MEGA,
    UnitPrefix::GIGA,
    UnitPrefix::TERA,
    UnitPrefix::PETA,
    UnitPrefix::EXA,
    UnitPrefix::ZETTA,
    UnitPrefix::YOTTA,
];
