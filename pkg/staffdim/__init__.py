"""Staff dimensioning for home health care territories."""
