"""Many-minds switching-structure process at desk scale."""
