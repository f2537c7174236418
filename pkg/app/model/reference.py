"""Published constants of the reference flat polynomial instance."""

REFERENCE_PRIME = (
    13850178546024150676274172131557249442552857086506417208905998552087
)
REFERENCE_H = 2**31
REFERENCE_DELTA_EXPONENT = 33
REFERENCE_DELTA = REFERENCE_PRIME >> REFERENCE_DELTA_EXPONENT

# c_1..c_5
REFERENCE_FLAT_COEFFICIENTS = (
    728236268016142987379676454561254599761666551820,
    118901258278655898193398330486974890011,
    80243828316297659193667769559,
    177312506479764141124,
    210305526612,
)

# A_i with A_i * i! = 1 (mod p), i = 1..5
REFERENCE_INVERSE_FACTORIALS = (
    1,
    6925089273012075338137086065778624721276428543253208604452999276044,
    11541815455020125563561810109631041202127380905422014340754998793406,
    9810543136767106729027538593186385021808273769608712189641748974395,
    1962108627353421345805507718637277004361654753921742437928349794879,
)

# Sum c_i C(x, i) stays below delta exactly for 0 <= x < this point.
REFERENCE_FLAT_CROSSING = 1739320086

REFERENCE_OSCILLATING_DEGREE = 5
