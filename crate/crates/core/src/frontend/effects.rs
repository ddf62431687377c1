//! Declared side effects of library functions whose bodies are not analyzed.

/// How a library call treats its arguments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LibraryEffect {
    pub name: &'static str,
    /// Argument positions whose pointee the call writes.
    pub writes: &'static [usize],
}

pub const LIBRARY_EFFECTS: &[LibraryEffect] = &[
    LibraryEffect { name: "strcat", writes: &[0] },
    LibraryEffect { name: "strncat", writes: &[0] },
    LibraryEffect { name: "strcpy", writes: &[0] },
    LibraryEffect { name: "strncpy", writes: &[0] },
    LibraryEffect { name: "sprintf", writes: &[0] },
    LibraryEffect { name: "snprintf", writes: &[0] },
    LibraryEffect { name: "memcpy", writes: &[0] },
    LibraryEffect { name: "memset", writes: &[0] },
    LibraryEffect { name: "fgets", writes: &[0] },
    LibraryEffect { name: "free", writes: &[0] },
    LibraryEffect { name: "malloc", writes: &[] },
    LibraryEffect { name: "strlen", writes: &[] },
    LibraryEffect { name: "printf", writes: &[] },
    LibraryEffect { name: "puts", writes: &[] },
    LibraryEffect { name: "atoi", writes: &[] },
    LibraryEffect { name: "getenv", writes: &[] },
];

pub fn library_effect(name: &str) -> Option<&'static LibraryEffect> {
    LIBRARY_EFFECTS.iter().find(|e| e.name == name)
}

pub fn is_library_function(name: &str) -> bool {
    library_effect(name).is_some()
}

/// Names preserved verbatim by identifier abstraction.
pub fn library_allowlist() -> impl Iterator<Item = &'static str> {
    LIBRARY_EFFECTS.iter().map(|e| e.name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strcat_writes_first_argument() {
        assert_eq!(library_effect("strcat").unwrap().writes, &[0]);
        assert!(library_effect("strlen").unwrap().writes.is_empty());
        assert!(library_effect("my_helper").is_none());
    }
}
